#include "fedboost/protocol.hpp"

#include <cmath>
#include <cstdio>
#include <json.hpp>

#include "fedboost/error.hpp"

namespace fedboost::protocol {

namespace {

using nlohmann::json;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Writes the canonical body. Doubles use 17 significant digits and always
// carry a fraction or exponent so -0.0 and integral values survive a parse.
class BodyWriter {
 public:
  BodyWriter(std::string_view kind, std::uint64_t request_id, std::string_view variant) {
    out_ = "{\"version\":" + std::to_string(kVersion);
    field("kind");
    string(kind);
    field("request_id");
    out_ += std::to_string(request_id);
    field("variant");
    string(variant);
  }

  BodyWriter& number(std::string_view name, double v) {
    field(name);
    real(v);
    return *this;
  }
  BodyWriter& count(std::string_view name, std::uint64_t v) {
    field(name);
    out_ += std::to_string(v);
    return *this;
  }
  BodyWriter& text(std::string_view name, std::string_view v) {
    field(name);
    string(v);
    return *this;
  }
  BodyWriter& reals(std::string_view name, const std::vector<double>& v) {
    field(name);
    out_ += '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out_ += ',';
      real(v[i]);
    }
    out_ += ']';
    return *this;
  }
  BodyWriter& pairs(std::string_view name, const std::vector<IndexPair>& v) {
    field(name);
    out_ += '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out_ += ',';
      out_ += '[' + std::to_string(v[i].j) + ',' + std::to_string(v[i].k) + ']';
    }
    out_ += ']';
    return *this;
  }
  BodyWriter& pair_values(std::string_view name, const std::vector<PairValue>& v) {
    field(name);
    out_ += '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out_ += ',';
      out_ += '[' + std::to_string(v[i].j) + ',' + std::to_string(v[i].k) + ',';
      real(v[i].value);
      out_ += ']';
    }
    out_ += ']';
    return *this;
  }

  std::string frame() && {
    out_ += '}';
    if (out_.size() > UINT32_MAX) throw Error(ErrorCode::kMalformedFrame, "body too large");
    return write_length(static_cast<std::uint32_t>(out_.size())) + out_;
  }

 private:
  void field(std::string_view name) {
    out_ += ",\"";
    out_ += name;
    out_ += "\":";
  }

  void string(std::string_view s) {
    out_ += '"';
    for (char c : s) {
      switch (c) {
        case '"': out_ += "\\\""; break;
        case '\\': out_ += "\\\\"; break;
        case '\n': out_ += "\\n"; break;
        case '\t': out_ += "\\t"; break;
        default:
          if (static_cast<unsigned char>(c) < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof buf, "\\u%04x", c);
            out_ += buf;
          } else {
            out_ += c;
          }
      }
    }
    out_ += '"';
  }

  void real(double v) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteScore, "cannot encode non-finite value");
    char buf[40];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string_view s(buf, static_cast<std::size_t>(len));
    out_ += s;
    if (s.find_first_of(".eE") == std::string_view::npos) out_ += ".0";
  }

  std::string out_;
};

json parse_frame(std::string_view frame) {
  if (frame.size() < kHeaderBytes) throw Error(ErrorCode::kMalformedFrame, "short header");
  const auto length = read_length(frame.substr(0, kHeaderBytes));
  if (frame.size() - kHeaderBytes != length)
    throw Error(ErrorCode::kMalformedFrame, "frame announces " + std::to_string(length) +
                                                " bytes, carries " +
                                                std::to_string(frame.size() - kHeaderBytes));
  json body = json::parse(frame.substr(kHeaderBytes), nullptr, false);
  if (body.is_discarded() || !body.is_object())
    throw Error(ErrorCode::kMalformedFrame, "body is not a JSON object");
  if (!body.contains("version") || !body["version"].is_number_integer())
    throw Error(ErrorCode::kMalformedFrame, "missing version");
  if (body["version"].get<int>() != kVersion)
    throw Error(ErrorCode::kVersionMismatch, "version " + body["version"].dump());
  return body;
}

const json& member(const json& body, const char* name) {
  auto it = body.find(name);
  if (it == body.end()) throw Error(ErrorCode::kMalformedFrame, std::string("missing ") + name);
  return *it;
}

double get_real(const json& v) {
  if (!v.is_number()) throw Error(ErrorCode::kMalformedFrame, "expected number");
  return v.get<double>();
}

std::uint64_t get_count(const json& v) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw Error(ErrorCode::kMalformedFrame, "expected non-negative integer");
  return v.get<std::uint64_t>();
}

std::vector<double> get_reals(const json& v) {
  if (!v.is_array()) throw Error(ErrorCode::kMalformedFrame, "expected array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) out.push_back(get_real(e));
  return out;
}

std::vector<IndexPair> get_pairs(const json& v) {
  if (!v.is_array()) throw Error(ErrorCode::kMalformedFrame, "expected pair array");
  if (v.size() > kMaxPairsPerMessage) throw Error(ErrorCode::kMalformedFrame, "too many pairs");
  std::vector<IndexPair> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_array() || e.size() != 2) throw Error(ErrorCode::kMalformedFrame, "bad pair");
    out.push_back({get_count(e[0]), get_count(e[1])});
  }
  return out;
}

std::vector<PairValue> get_pair_values(const json& v) {
  if (!v.is_array()) throw Error(ErrorCode::kMalformedFrame, "expected value array");
  std::vector<PairValue> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_array() || e.size() != 3) throw Error(ErrorCode::kMalformedFrame, "bad pair value");
    out.push_back({get_count(e[0]), get_count(e[1]), get_real(e[2])});
  }
  return out;
}

std::string get_text(const json& v) {
  if (!v.is_string()) throw Error(ErrorCode::kMalformedFrame, "expected string");
  return v.get<std::string>();
}

RequestBody request_body(const json& body, const std::string& variant) {
  if (variant == "Describe") return req::Describe{};
  if (variant == "StandardizeLocal") return req::StandardizeLocal{};
  if (variant == "GlobalMeans") return req::GlobalMeans{};
  if (variant == "GlobalSsq")
    return req::GlobalSsq{get_reals(member(body, "means")), get_real(member(body, "y_mean"))};
  if (variant == "ApplyGlobalStandardization")
    return req::ApplyGlobalStandardization{get_reals(member(body, "means")),
                                           get_reals(member(body, "sds")),
                                           get_real(member(body, "y_mean"))};
  if (variant == "UnivariableStats") return req::UnivariableStats{};
  if (variant == "CovarianceBlock") return req::CovarianceBlock{get_pairs(member(body, "pairs"))};
  throw Error(ErrorCode::kUnknownVariant, "request variant '" + variant + "'");
}

ResponseBody response_body(const json& body, const std::string& variant) {
  if (variant == "SiteMeta")
    return resp::SiteMeta{get_count(member(body, "n")), get_count(member(body, "p"))};
  if (variant == "Ack") return resp::Ack{};
  if (variant == "MomentSums")
    return resp::MomentSums{get_count(member(body, "n")), get_real(member(body, "sum_y")),
                            get_reals(member(body, "sum_x"))};
  if (variant == "SsqSums")
    return resp::SsqSums{get_reals(member(body, "ssq_x")), get_real(member(body, "ssq_y"))};
  if (variant == "UnivariableStats")
    return resp::UnivariableStats{get_reals(member(body, "a")), get_reals(member(body, "c_diag"))};
  if (variant == "CovarianceBlock")
    return resp::CovarianceBlock{get_pair_values(member(body, "values"))};
  if (variant == "Refusal") return resp::Refusal{get_text(member(body, "reason"))};
  throw Error(ErrorCode::kUnknownVariant, "response variant '" + variant + "'");
}

}  // namespace

std::string_view variant_name(const RequestBody& body) {
  return std::visit(overloaded{
                        [](const req::Describe&) { return "Describe"; },
                        [](const req::StandardizeLocal&) { return "StandardizeLocal"; },
                        [](const req::GlobalMeans&) { return "GlobalMeans"; },
                        [](const req::GlobalSsq&) { return "GlobalSsq"; },
                        [](const req::ApplyGlobalStandardization&) {
                          return "ApplyGlobalStandardization";
                        },
                        [](const req::UnivariableStats&) { return "UnivariableStats"; },
                        [](const req::CovarianceBlock&) { return "CovarianceBlock"; },
                    },
                    body);
}

std::string_view variant_name(const ResponseBody& body) {
  return std::visit(overloaded{
                        [](const resp::SiteMeta&) { return "SiteMeta"; },
                        [](const resp::Ack&) { return "Ack"; },
                        [](const resp::MomentSums&) { return "MomentSums"; },
                        [](const resp::SsqSums&) { return "SsqSums"; },
                        [](const resp::UnivariableStats&) { return "UnivariableStats"; },
                        [](const resp::CovarianceBlock&) { return "CovarianceBlock"; },
                        [](const resp::Refusal&) { return "Refusal"; },
                    },
                    body);
}

bool answers(const RequestBody& request, const ResponseBody& response) {
  if (std::holds_alternative<resp::Refusal>(response)) return true;
  return std::visit(overloaded{
                        [&](const req::Describe&) {
                          return std::holds_alternative<resp::SiteMeta>(response);
                        },
                        [&](const req::StandardizeLocal&) {
                          return std::holds_alternative<resp::Ack>(response);
                        },
                        [&](const req::GlobalMeans&) {
                          return std::holds_alternative<resp::MomentSums>(response);
                        },
                        [&](const req::GlobalSsq&) {
                          return std::holds_alternative<resp::SsqSums>(response);
                        },
                        [&](const req::ApplyGlobalStandardization&) {
                          return std::holds_alternative<resp::Ack>(response);
                        },
                        [&](const req::UnivariableStats&) {
                          return std::holds_alternative<resp::UnivariableStats>(response);
                        },
                        [&](const req::CovarianceBlock&) {
                          return std::holds_alternative<resp::CovarianceBlock>(response);
                        },
                    },
                    request);
}

std::string encode(const Request& msg) {
  BodyWriter w("request", msg.request_id, variant_name(msg.body));
  std::visit(overloaded{
                 [](const req::Describe&) {},
                 [](const req::StandardizeLocal&) {},
                 [](const req::GlobalMeans&) {},
                 [&](const req::GlobalSsq& r) { w.reals("means", r.means).number("y_mean", r.y_mean); },
                 [&](const req::ApplyGlobalStandardization& r) {
                   w.reals("means", r.means).reals("sds", r.sds).number("y_mean", r.y_mean);
                 },
                 [](const req::UnivariableStats&) {},
                 [&](const req::CovarianceBlock& r) {
                   if (r.pairs.size() > kMaxPairsPerMessage)
                     throw Error(ErrorCode::kMalformedFrame, "pair list exceeds message cap");
                   w.pairs("pairs", r.pairs);
                 },
             },
             msg.body);
  return std::move(w).frame();
}

std::string encode(const Response& msg) {
  BodyWriter w("response", msg.request_id, variant_name(msg.body));
  std::visit(overloaded{
                 [&](const resp::SiteMeta& r) { w.count("n", r.n).count("p", r.p); },
                 [](const resp::Ack&) {},
                 [&](const resp::MomentSums& r) {
                   w.count("n", r.n).number("sum_y", r.sum_y).reals("sum_x", r.sum_x);
                 },
                 [&](const resp::SsqSums& r) { w.reals("ssq_x", r.ssq_x).number("ssq_y", r.ssq_y); },
                 [&](const resp::UnivariableStats& r) { w.reals("a", r.a).reals("c_diag", r.c_diag); },
                 [&](const resp::CovarianceBlock& r) { w.pair_values("values", r.values); },
                 [&](const resp::Refusal& r) { w.text("reason", r.reason); },
             },
             msg.body);
  return std::move(w).frame();
}

Message decode(std::string_view frame) {
  const json body = parse_frame(frame);
  const std::string kind = get_text(member(body, "kind"));
  const std::uint64_t id = get_count(member(body, "request_id"));
  const std::string variant = get_text(member(body, "variant"));
  if (kind == "request") return Request{id, request_body(body, variant)};
  if (kind == "response") return Response{id, response_body(body, variant)};
  throw Error(ErrorCode::kUnknownVariant, "message kind '" + kind + "'");
}

Request decode_request(std::string_view frame) {
  auto msg = decode(frame);
  if (auto* r = std::get_if<Request>(&msg)) return std::move(*r);
  throw Error(ErrorCode::kUnknownVariant, "expected a request");
}

Response decode_response(std::string_view frame) {
  auto msg = decode(frame);
  if (auto* r = std::get_if<Response>(&msg)) return std::move(*r);
  throw Error(ErrorCode::kUnknownVariant, "expected a response");
}

std::uint32_t read_length(std::string_view header) {
  if (header.size() < kHeaderBytes) throw Error(ErrorCode::kMalformedFrame, "short header");
  std::uint32_t n = 0;
  for (std::size_t i = 0; i < kHeaderBytes; ++i)
    n = (n << 8) | static_cast<unsigned char>(header[i]);
  return n;
}

std::string write_length(std::uint32_t length) {
  std::string out(kHeaderBytes, '\0');
  for (std::size_t i = 0; i < kHeaderBytes; ++i)
    out[i] = static_cast<char>((length >> (8 * (kHeaderBytes - 1 - i))) & 0xffu);
  return out;
}

std::variant<std::monostate, resp::Refusal> check_disclosure(const RequestBody& request,
                                                             const resp::SiteMeta& meta,
                                                             const DisclosurePolicy& policy) {
  const bool carries_statistics =
      std::holds_alternative<req::GlobalMeans>(request) ||
      std::holds_alternative<req::GlobalSsq>(request) ||
      std::holds_alternative<req::UnivariableStats>(request) ||
      std::holds_alternative<req::CovarianceBlock>(request);
  if (carries_statistics && meta.n < policy.min_site_n) return resp::Refusal{"site too small"};
  return std::monostate{};
}

}  // namespace fedboost::protocol
