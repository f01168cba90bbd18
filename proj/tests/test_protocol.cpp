#include <doctest.h>

#include <cstring>
#include <random>

#include "fedboost/error.hpp"
#include "fedboost/protocol.hpp"
#include "message_gen.hpp"

using namespace fedboost;
using namespace fedboost::protocol;

namespace {

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::string body_of(const std::string& frame) { return frame.substr(kHeaderBytes); }

std::string frame_of(const std::string& body) {
  return write_length(static_cast<std::uint32_t>(body.size())) + body;
}

}  // namespace

TEST_CASE("roundtrip of 1000 random messages is exact") {
  testing::MessageGen gen(2024);
  for (int i = 0; i < 500; ++i) {
    const auto req = gen.request();
    const auto back = decode_request(encode(req));
    CHECK(back == req);
    if (auto* g = std::get_if<req::GlobalSsq>(&req.body))
      CHECK(bit_equal(std::get<req::GlobalSsq>(back.body).means, g->means));

    const auto res = gen.response();
    const auto rback = decode_response(encode(res));
    CHECK(rback == res);
    if (auto* u = std::get_if<resp::UnivariableStats>(&res.body))
      CHECK(bit_equal(std::get<resp::UnivariableStats>(rback.body).a, u->a));
  }
}

TEST_CASE("negative zero survives encoding") {
  Request r{7, req::GlobalSsq{{-0.0, 0.0}, -0.0}};
  const auto back = std::get<req::GlobalSsq>(decode_request(encode(r)).body);
  CHECK(std::signbit(back.means[0]));
  CHECK(!std::signbit(back.means[1]));
  CHECK(std::signbit(back.y_mean));
}

TEST_CASE("named examples") {
  Request d{1, req::Describe{}};
  CHECK(decode_request(encode(d)) == d);
  Request c{2, req::CovarianceBlock{{{1, 2}, {3, 7}}}};
  const auto back = decode_request(encode(c));
  CHECK(back == c);
  CHECK(std::get<req::CovarianceBlock>(back.body).pairs[1] == IndexPair{3, 7});
}

TEST_CASE("body has a fixed field order") {
  const auto body = body_of(encode(Request{5, req::Describe{}}));
  CHECK(body.rfind(R"({"version":1,"kind":"request","request_id":5,"variant":"Describe")", 0) == 0);
}

TEST_CASE("malformed input") {
  const auto frame = encode(Request{3, req::CovarianceBlock{{{1, 2}}}});
  SUBCASE("truncated body") {
    CHECK_THROWS_WITH_AS(decode(frame.substr(0, frame.size() - 3)), doctest::Contains("MalformedFrame"),
                         Error);
  }
  SUBCASE("truncated header") {
    CHECK_THROWS_AS(decode(frame.substr(0, 2)), Error);
  }
  SUBCASE("trailing bytes") {
    CHECK_THROWS_AS(decode(frame + "x"), Error);
  }
  SUBCASE("not json") {
    CHECK_THROWS_AS(decode(frame_of("{nope")), Error);
  }
  SUBCASE("unknown variant") {
    try {
      decode(frame_of(R"({"version":1,"kind":"request","request_id":1,"variant":"Exfiltrate"})"));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kUnknownVariant);
    }
  }
  SUBCASE("version mismatch") {
    try {
      decode(frame_of(R"({"version":2,"kind":"request","request_id":1,"variant":"Describe"})"));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kVersionMismatch);
    }
  }
  SUBCASE("missing field") {
    try {
      decode(frame_of(R"({"version":1,"kind":"request","request_id":1,"variant":"CovarianceBlock"})"));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kMalformedFrame);
    }
  }
}

TEST_CASE("length header is big-endian") {
  CHECK(write_length(0x01020304) == std::string("\x01\x02\x03\x04", 4));
  CHECK(read_length(std::string("\x00\x00\x01\x00", 4)) == 256);
}

TEST_CASE("variant names and answers") {
  CHECK(variant_name(RequestBody{req::UnivariableStats{}}) == "UnivariableStats");
  CHECK(answers(req::Describe{}, resp::SiteMeta{}));
  CHECK(answers(req::Describe{}, resp::Refusal{}));
  CHECK_FALSE(answers(req::Describe{}, resp::Ack{}));
  CHECK(answers(req::CovarianceBlock{}, resp::CovarianceBlock{}));
}

TEST_CASE("disclosure policy") {
  const DisclosurePolicy policy{10};
  auto allowed = [&](const RequestBody& body, std::uint64_t n) {
    return std::holds_alternative<std::monostate>(check_disclosure(body, {n, 3}, policy));
  };
  CHECK(allowed(req::UnivariableStats{}, 25));
  CHECK_FALSE(allowed(req::CovarianceBlock{}, 5));
  CHECK(std::get<resp::Refusal>(check_disclosure(req::CovarianceBlock{}, {5, 3}, policy)).reason ==
        "site too small");
  CHECK(allowed(req::Describe{}, 5));
  CHECK(allowed(req::StandardizeLocal{}, 5));
  CHECK_FALSE(allowed(req::GlobalMeans{}, 5));
  CHECK_FALSE(allowed(req::GlobalSsq{}, 9));
  CHECK(allowed(req::GlobalSsq{}, 10));
}
