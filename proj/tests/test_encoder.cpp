#include <cmath>
#include <vector>

#include "doctest.h"
#include "rbert/encoder.hpp"

using namespace rbert;

namespace {

EncoderParams small_encoder(int vocab, int max_len, int d, int layers,
                            int heads, int ffn, std::uint64_t seed) {
  EncoderParams ep;
  Rng rng(seed);
  ep.init({vocab, max_len, d, layers, heads, ffn}, rng);
  return ep;
}

}  // namespace

TEST_CASE("encoder config validation") {
  EncoderConfig bad{10, 16, 10, 2, 4, 16};  // 10 % 4 != 0
  CHECK_THROWS_AS(bad.validate(), data_error);
  EncoderConfig zero{0, 16, 8, 2, 2, 16};
  CHECK_THROWS_AS(zero.validate(), data_error);
}

TEST_CASE("single token attends only to itself") {
  EncoderParams ep = small_encoder(6, 8, 8, 1, 2, 16, 21);
  std::vector<int> ids = {3};
  std::vector<int> mask = {1};
  EncoderCache cache;
  encoder_forward(ep, ids, mask, &cache);
  const Tensor& probs = cache.layers[0].attn.probs;
  for (Real p : probs.v) CHECK(p == doctest::Approx(1.0));
}

TEST_CASE("mask length mismatch") {
  EncoderParams ep = small_encoder(6, 8, 8, 1, 2, 16, 22);
  std::vector<int> ids = {1, 2};
  std::vector<int> mask = {1};
  CHECK_THROWS_AS(encoder_forward(ep, ids, mask, nullptr), data_error);
}

TEST_CASE("content at masked positions does not leak into unmasked outputs") {
  EncoderParams ep = small_encoder(12, 10, 8, 2, 2, 16, 23);
  Rng rng(31);
  std::vector<int> ids(10), mask(10, 0);
  for (int t = 0; t < 10; ++t) ids[t] = static_cast<int>(rng.index(12));
  for (int t = 0; t < 6; ++t) mask[t] = 1;
  Tensor out1 = encoder_forward(ep, ids, mask, nullptr);
  std::vector<int> ids2 = ids;
  for (int t = 6; t < 10; ++t) ids2[t] = static_cast<int>(rng.index(12));
  Tensor out2 = encoder_forward(ep, ids2, mask, nullptr);
  for (int t = 0; t < 6; ++t) {
    for (int j = 0; j < 8; ++j) {
      CHECK(out1.at(t, j) == doctest::Approx(out2.at(t, j)).epsilon(1e-12));
    }
  }
}

TEST_CASE("encoder is deterministic") {
  EncoderParams ep = small_encoder(10, 8, 8, 2, 2, 16, 24);
  std::vector<int> ids = {2, 5, 7, 1};
  std::vector<int> mask = {1, 1, 1, 1};
  Tensor a = encoder_forward(ep, ids, mask, nullptr);
  Tensor b = encoder_forward(ep, ids, mask, nullptr);
  CHECK(a.v == b.v);
}

TEST_CASE("encoder parameter gradients match finite differences") {
  // 2-layer, d=8, 2-head block per the gradient-integrity contract
  EncoderParams ep = small_encoder(9, 6, 8, 2, 2, 12, 25);
  Rng rng(41);
  std::vector<int> ids = {1, 4, 2, 7, 0, 0};
  std::vector<int> mask = {1, 1, 1, 1, 0, 0};
  Tensor coeff = Tensor::zeros({6, 8});
  for (Real& v : coeff.v) v = rng.uniform(-1, 1);
  auto loss = [&]() {
    Tensor out = encoder_forward(ep, ids, mask, nullptr);
    Real s = 0;
    for (std::size_t i = 0; i < out.v.size(); ++i) s += coeff.v[i] * out.v[i];
    return s;
  };
  EncoderCache cache;
  encoder_forward(ep, ids, mask, &cache);
  encoder_backward(ep, ids, mask, cache, coeff);
  std::vector<Parameter*> params;
  ep.collect(params);
  Real h = 1e-4;
  Real worst = 0;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.v.size(); ++i) {
      Real orig = p->value.v[i];
      p->value.v[i] = orig + h;
      Real lp = loss();
      p->value.v[i] = orig - h;
      Real lm = loss();
      p->value.v[i] = orig;
      Real fd = (lp - lm) / (2 * h);
      Real an = p->grad.v[i];
      Real rel = std::fabs(an - fd) /
                 std::max({std::fabs(an), std::fabs(fd), Real{1e-6}});
      worst = std::max(worst, rel);
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("token id outside vocabulary is rejected") {
  EncoderParams ep = small_encoder(4, 8, 8, 1, 2, 16, 26);
  std::vector<int> ids = {5};
  std::vector<int> mask = {1};
  CHECK_THROWS_AS(encoder_forward(ep, ids, mask, nullptr), data_error);
}
