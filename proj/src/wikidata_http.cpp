#ifdef CULTUREVAL_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include "cultureval/wikidata.hpp"

namespace cultureval::wikidata {

std::string WikidataClient::http_get(const std::string& query) {
  std::lock_guard lock(net_mu_);
  ++network_calls_;
  httplib::Client client(options_.base_url);
  client.set_connection_timeout(15);
  client.set_read_timeout(60);
  client.set_default_headers({{"User-Agent", "cultureval/0.1 (batch evaluation tool)"}});
  auto res = client.Get(query);
  if (!res) throw FetchError("transport error: " + httplib::to_string(res.error()));
  if (res->status == 429) throw FetchError("rate limited (HTTP 429)");
  if (res->status != 200) throw FetchError("HTTP " + std::to_string(res->status));
  return res->body;
}

}  // namespace cultureval::wikidata
