#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "seq2bf/checkpoint.hpp"
#include "seq2bf/error.hpp"
#include "seq2bf/gradcheck.hpp"
#include "seq2bf/gru.hpp"
#include "seq2bf/optim.hpp"
#include "seq2bf/random.hpp"
#include "seq2bf/tape.hpp"
#include "seq2bf/tensor.hpp"

using namespace seq2bf;

namespace {

std::vector<double> random_vector(Rng& rng, size_t n, double range = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = (2.0 * uniform_unit(rng) - 1.0) * range;
  return v;
}

ParamList cell_params(GruCell& cell) {
  ParamList out;
  cell.append_params(out, "cell");
  return out;
}

}  // namespace

TEST_CASE("init_uniform is bounded and seeded") {
  Tensor a({1000});
  Tensor b({1000});
  init_uniform(std::vector<NamedTensor>{{"a", &a}}, 42);
  init_uniform(std::vector<NamedTensor>{{"b", &b}}, 42);
  CHECK(a.values == b.values);
  for (float v : a.values) {
    CHECK(v >= -0.08f);
    CHECK(v <= 0.08f);
  }
  const double mean = std::accumulate(a.values.begin(), a.values.end(), 0.0) / 1000.0;
  CHECK(std::abs(mean) < 0.01);

  Tensor c({1000});
  init_uniform(std::vector<NamedTensor>{{"c", &c}}, 43);
  CHECK(c.values != a.values);
}

TEST_CASE("gru_step closed forms") {
  GruCell cell(3, 4);
  const std::vector<double> x{0.5, -1.0, 2.0};
  const std::vector<double> h{0.2, -0.4, 0.6, 1.0};
  auto out = gru_step(cell, x, h);
  for (size_t i = 0; i < 4; ++i) CHECK(out[i] == 0.5 * h[i]);
  auto zero = gru_step(cell, x, std::vector<double>(4, 0.0));
  for (double v : zero) CHECK(v == 0.0);
}

TEST_CASE("gru_step gradient of sum h' matches finite differences") {
  GruCell cell(4, 4);
  auto params = cell_params(cell);
  init_uniform(params, 5, 0.5f);
  Rng rng(9);
  const auto x = random_vector(rng, 4);
  const auto h = random_vector(rng, 4);
  Tensor ones({1, 4});
  std::fill(ones.values.begin(), ones.values.end(), 1.0f);

  auto loss = [&](bool with_grad) {
    Tape tape(with_grad);
    auto out = gru_step(tape, cell, tape.constant(x), tape.constant(h));
    auto total = tape.matvec(ones, out);
    if (with_grad) tape.backward(total);
    return tape.value(total)[0];
  };
  auto report = grad_check(loss, params);
  CHECK(report.per_tensor.size() == 9);
  for (const auto& t : report.per_tensor) {
    INFO(t.name);
    CHECK(t.max_rel_error < 1e-4);
  }
}

TEST_CASE("softmax_xent") {
  SUBCASE("uniform logits give ln V") {
    std::vector<double> logits(7, 0.3);
    auto r = softmax_xent(logits, 2);
    CHECK(r.loss == doctest::Approx(std::log(7.0)).epsilon(1e-14));
  }
  SUBCASE("shift invariance and normalization") {
    Rng rng(3);
    auto logits = random_vector(rng, 10, 5.0);
    auto shifted = logits;
    for (double& v : shifted) v += 1000.0;
    auto a = softmax_xent(logits, 4);
    auto b = softmax_xent(shifted, 4);
    CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-12));
    double sum = 0.0;
    for (size_t i = 0; i < 10; ++i) {
      CHECK(a.probs[i] > 0.0);
      CHECK(a.probs[i] == doctest::Approx(b.probs[i]).epsilon(1e-12));
      sum += a.probs[i];
    }
    CHECK(std::abs(sum - 1.0) < 1e-6);
  }
  SUBCASE("gradient matches finite differences") {
    Tensor logits({10});
    Rng rng(21);
    for (float& v : logits.values) v = static_cast<float>(2.0 * uniform_unit(rng) - 1.0);
    std::vector<NamedTensor> params{{"logits", &logits}};
    auto loss = [&](bool with_grad) {
      Tape tape(with_grad);
      auto out = tape.softmax_xent(tape.add_bias(tape.zeros(10), logits), 3);
      if (with_grad) tape.backward(out);
      return tape.scalar(out);
    };
    CHECK(grad_check(loss, params).max_rel_error < 1e-4);
  }
  SUBCASE("target out of range") { CHECK_THROWS_AS(softmax_xent(std::vector<double>{1.0, 2.0}, 2), ShapeError); }
}

TEST_CASE("rmsprop_step") {
  SUBCASE("zero gradient decays the cache and keeps parameters") {
    Tensor p({3});
    p.values = {0.1f, -0.2f, 0.3f};
    const auto before = p.values;
    RmspropState state;
    state.cache = {{1.0, 2.0, 0.5}};
    rmsprop_step(state, std::vector<NamedTensor>{{"p", &p}});
    CHECK(p.values == before);
    CHECK(state.cache[0][0] == doctest::Approx(0.99));
    CHECK(state.cache[0][1] == doctest::Approx(1.98));
    CHECK(state.cache[0][2] == doctest::Approx(0.495));
  }
  SUBCASE("single hand-evaluated step") {
    Tensor p({1});
    p.values = {0.0f};
    p.grad = {1.0};
    RmspropState state;
    rmsprop_step(state, std::vector<NamedTensor>{{"p", &p}});
    CHECK(state.cache[0][0] == doctest::Approx(0.01).epsilon(1e-15));
    // 0.002 / sqrt(0.01 + 1e-8), evaluated independently.
    CHECK(std::abs(static_cast<double>(p.values[0]) - (-0.0199999900000075)) < 1e-9);
  }
  SUBCASE("cache stays nonnegative") {
    Tensor p({50});
    Rng rng(1);
    RmspropState state;
    for (int step = 0; step < 20; ++step) {
      p.grad = random_vector(rng, 50, 3.0);
      rmsprop_step(state, std::vector<NamedTensor>{{"p", &p}});
      for (double c : state.cache[0]) CHECK(c >= 0.0);
    }
  }
}

TEST_CASE("embedding_sgd_step touches only marked rows") {
  EmbeddingTable table(5, 3);
  init_uniform(std::vector<NamedTensor>{{"e", &table.weight}}, 2);
  const auto before = table.weight.values;
  for (size_t i = 0; i < 3; ++i) table.weight.grad[2 * 3 + i] = 1.0 + static_cast<double>(i);
  table.weight.grad[4 * 3] = 7.0;  // not marked, must be ignored
  table.mark(2);
  embedding_sgd_step(table, 0.1);
  for (size_t r = 0; r < 5; ++r) {
    for (size_t i = 0; i < 3; ++i) {
      const size_t j = r * 3 + i;
      if (r == 2) {
        CHECK(table.weight.values[j] == static_cast<float>(before[j] - 0.1 * (1.0 + static_cast<double>(i))));
      } else {
        CHECK(table.weight.values[j] == before[j]);
      }
    }
  }
  CHECK(table.touched_rows().empty());
}

TEST_CASE("gather marks rows through backward") {
  EmbeddingTable table(4, 2);
  Tape tape;
  Tensor w({1, 2});
  w.values = {1.0f, 1.0f};
  auto out = tape.matvec(w, tape.gather(table, 3));
  tape.backward(out);
  CHECK(table.touched_rows() == std::vector<size_t>{3});
  CHECK(table.weight.grad[6] == 1.0);
}

TEST_CASE("literal embedding rate") { CHECK(literal_embedding_rate(0.002, 1e-8) == doctest::Approx(20.0).epsilon(1e-12)); }

TEST_CASE("clip_global_norm") {
  Tensor a({2});
  Tensor b({1});
  a.grad = {3.0, 0.0};
  b.grad = {4.0};
  std::vector<NamedTensor> params{{"a", &a}, {"b", &b}};
  CHECK(clip_global_norm(params, 10.0) == doctest::Approx(5.0));
  CHECK(a.grad[0] == 3.0);
  CHECK(clip_global_norm(params, 1.0) == doctest::Approx(5.0));
  CHECK(a.grad[0] == doctest::Approx(0.6));
  CHECK(b.grad[0] == doctest::Approx(0.8));
}

TEST_CASE("grad_check") {
  Tensor theta({6});
  Rng rng(4);
  for (float& v : theta.values) v = static_cast<float>(2.0 * uniform_unit(rng) - 1.0);
  std::vector<NamedTensor> params{{"theta", &theta}};

  SUBCASE("quadratic loss agrees to float rounding") {
    auto loss = [&](bool with_grad) {
      double l = 0.0;
      for (size_t i = 0; i < theta.size(); ++i) {
        l += 0.5 * theta.values[i] * theta.values[i];
        if (with_grad) theta.grad[i] = theta.values[i];
      }
      return l;
    };
    CHECK(grad_check(loss, params).max_rel_error < 1e-7);
  }
  SUBCASE("a doubled gradient entry is reported") {
    auto loss = [&](bool with_grad) {
      double l = 0.0;
      for (size_t i = 0; i < theta.size(); ++i) {
        l += 0.5 * theta.values[i] * theta.values[i];
        if (with_grad) theta.grad[i] = theta.values[i] * (i == 2 ? 2.0 : 1.0);
      }
      return l;
    };
    CHECK(grad_check(loss, params).max_rel_error > 0.3);
  }
  SUBCASE("non-finite loss names the tensor") {
    auto loss = [&](bool with_grad) {
      if (with_grad) return 0.0;
      return std::numeric_limits<double>::quiet_NaN();
    };
    try {
      grad_check(loss, params);
      FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
      CHECK(std::string(e.what()).find("theta") != std::string::npos);
    }
  }
}

TEST_CASE("checkpoint round trip is bit exact") {
  Tensor a({2, 3});
  Tensor b({4});
  init_uniform(std::vector<NamedTensor>{{"a", &a}, {"b", &b}}, 8);
  std::vector<NamedTensor> params{{"a", &a}, {"b", &b}};
  Metadata meta{{"component", "forward"}, {"vocab_hash", "123"}};
  std::stringstream buf;
  write_checkpoint(buf, meta, params);
  CHECK(buf.str().substr(0, 4) == "S2BF");
  auto ck = read_checkpoint(buf);
  CHECK(ck.metadata == meta);

  Tensor a2({2, 3});
  Tensor b2({4});
  assign_params(ck, std::vector<NamedTensor>{{"a", &a2}, {"b", &b2}});
  CHECK(a2.values == a.values);
  CHECK(b2.values == b.values);

  Tensor wrong({3, 2});
  CHECK_THROWS_AS(assign_params(ck, std::vector<NamedTensor>{{"a", &wrong}}), FormatError);
  Tensor missing({1});
  CHECK_THROWS_AS(assign_params(ck, std::vector<NamedTensor>{{"c", &missing}}), FormatError);

  std::stringstream truncated(buf.str().substr(0, 10));
  CHECK_THROWS(read_checkpoint(truncated));
}

TEST_CASE("metadata text round trip") {
  Metadata meta{{"a", "1"}, {"b", "x=y"}};
  CHECK(parse_metadata(format_metadata(meta)) == meta);
}
