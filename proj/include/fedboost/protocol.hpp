#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fedboost/types.hpp"

// Coordinator <-> site messages. A frame is a 4-byte big-endian body length
// followed by a UTF-8 JSON body whose fields always appear in the same order:
//   {"version":1,"kind":"request"|"response","request_id":..,"variant":"..",...}
// Nothing in here carries an individual-level row.
namespace fedboost::protocol {

inline constexpr int kVersion = 1;
inline constexpr std::size_t kMaxPairsPerMessage = 65536;
inline constexpr std::size_t kHeaderBytes = 4;

namespace req {
struct Describe {
  friend bool operator==(const Describe&, const Describe&) = default;
};
struct StandardizeLocal {
  friend bool operator==(const StandardizeLocal&, const StandardizeLocal&) = default;
};
struct GlobalMeans {
  friend bool operator==(const GlobalMeans&, const GlobalMeans&) = default;
};
struct GlobalSsq {
  std::vector<double> means;
  double y_mean = 0.0;
  friend bool operator==(const GlobalSsq&, const GlobalSsq&) = default;
};
struct ApplyGlobalStandardization {
  std::vector<double> means;
  std::vector<double> sds;
  double y_mean = 0.0;
  friend bool operator==(const ApplyGlobalStandardization&,
                         const ApplyGlobalStandardization&) = default;
};
struct UnivariableStats {
  friend bool operator==(const UnivariableStats&, const UnivariableStats&) = default;
};
struct CovarianceBlock {
  std::vector<IndexPair> pairs;
  friend bool operator==(const CovarianceBlock&, const CovarianceBlock&) = default;
};
}  // namespace req

namespace resp {
struct SiteMeta {
  std::uint64_t n = 0;
  std::uint64_t p = 0;
  friend bool operator==(const SiteMeta&, const SiteMeta&) = default;
};
struct Ack {
  friend bool operator==(const Ack&, const Ack&) = default;
};
struct MomentSums {
  std::uint64_t n = 0;
  double sum_y = 0.0;
  std::vector<double> sum_x;
  friend bool operator==(const MomentSums&, const MomentSums&) = default;
};
struct SsqSums {
  std::vector<double> ssq_x;
  double ssq_y = 0.0;
  friend bool operator==(const SsqSums&, const SsqSums&) = default;
};
struct UnivariableStats {
  std::vector<double> a;
  std::vector<double> c_diag;
  friend bool operator==(const UnivariableStats&, const UnivariableStats&) = default;
};
struct CovarianceBlock {
  std::vector<PairValue> values;
  friend bool operator==(const CovarianceBlock&, const CovarianceBlock&) = default;
};
struct Refusal {
  std::string reason;
  friend bool operator==(const Refusal&, const Refusal&) = default;
};
}  // namespace resp

using RequestBody = std::variant<req::Describe, req::StandardizeLocal, req::GlobalMeans,
                                 req::GlobalSsq, req::ApplyGlobalStandardization,
                                 req::UnivariableStats, req::CovarianceBlock>;

using ResponseBody = std::variant<resp::SiteMeta, resp::Ack, resp::MomentSums, resp::SsqSums,
                                  resp::UnivariableStats, resp::CovarianceBlock, resp::Refusal>;

struct Request {
  std::uint64_t request_id = 0;
  RequestBody body;
  friend bool operator==(const Request&, const Request&) = default;
};

struct Response {
  std::uint64_t request_id = 0;
  ResponseBody body;
  friend bool operator==(const Response&, const Response&) = default;
};

using Message = std::variant<Request, Response>;

std::string_view variant_name(const RequestBody& body);
std::string_view variant_name(const ResponseBody& body);

// True when `response` is the answer kind `request` expects, or a Refusal.
bool answers(const RequestBody& request, const ResponseBody& response);

std::string encode(const Request& msg);
std::string encode(const Response& msg);

// Full frame (header + body). Throws MalformedFrame, UnknownVariant, VersionMismatch.
Message decode(std::string_view frame);
Request decode_request(std::string_view frame);
Response decode_response(std::string_view frame);

// Body length announced by a 4-byte header.
std::uint32_t read_length(std::string_view header);
std::string write_length(std::uint32_t length);

struct DisclosurePolicy {
  std::uint64_t min_site_n = 10;
};

// Empty when the request may be served.
std::variant<std::monostate, resp::Refusal> check_disclosure(const RequestBody& request,
                                                             const resp::SiteMeta& meta,
                                                             const DisclosurePolicy& policy);

}  // namespace fedboost::protocol
