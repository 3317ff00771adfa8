#include <cmath>
#include <cstring>
#include <filesystem>

#include "doctest.h"
#include "sharpnerf/autodiff/checkpoint.hpp"
#include "sharpnerf/autodiff/params.hpp"
#include "sharpnerf/autodiff/tensor.hpp"
#include "sharpnerf/rng.hpp"

using namespace sharpnerf;
using namespace sharpnerf::ad;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(lo, hi);
  return t;
}

// Random values bounded away from zero, for kinked ops.
Tensor random_nonzero(Shape shape, Rng& rng, double margin = 0.05) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) {
    double v = rng.uniform(margin, 1.0);
    t.data()[i] = rng.uniform() < 0.5 ? -v : v;
  }
  return t;
}

}  // namespace

TEST_CASE("forward examples") {
  Tensor x({3}, {-1.0, 0.0, 2.0});
  Tensor r = relu(x);
  CHECK(r.at(0) == 0.0);
  CHECK(r.at(1) == 0.0);
  CHECK(r.at(2) == 2.0);

  Rng rng(7);
  Tensor a = random_tensor({3, 3}, rng);
  Tensor out = matmul(Tensor::identity(3), a);
  for (std::size_t i = 0; i < 9; ++i) CHECK(out.at(i) == doctest::Approx(a.at(i)).epsilon(1e-15));

  CHECK(sigmoid(Tensor::scalar(0.0)).item() == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("shape errors name the op and shapes") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({4, 5});
  CHECK_THROWS_WITH_AS(add(a, b), doctest::Contains("add"), AdError);
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("matmul"), AdError);
  CHECK_THROWS_AS(log(Tensor::scalar(-1.0)), AdError);
  CHECK_THROWS_AS(pow_const(Tensor::scalar(-2.0), 0.5), AdError);
}

TEST_CASE("broadcasting follows the right-aligned rule") {
  Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b({3}, {10, 20, 30});
  Tensor c = add(a, b);
  CHECK(c.shape() == Shape{2, 3});
  CHECK(c.at(0) == 11.0);
  CHECK(c.at(5) == 36.0);

  Tensor col({2, 1}, {100, 200});
  Tensor d = mul(a, col);
  CHECK(d.at(2) == 300.0);
  CHECK(d.at(3) == 800.0);

  Tensor s = Tensor::scalar(2.0);
  Tensor e = mul(a, s);
  CHECK(e.at(4) == 10.0);
}

TEST_CASE("backward: sum of squares") {
  Tape tape;
  Tensor x({3}, {1.0, 2.0, 3.0});
  tape.leaf(x);
  Tensor y = sum_all(mul(x, x));
  auto grads = tape.backward(y);
  const Tensor& g = grads.at(x.node());
  CHECK(g.at(0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(g.at(1) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(g.at(2) == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("backward: sigmoid at zero matches finite differences") {
  // Independent oracle: central difference of the logistic at 0 with h = 1e-5.
  const double h = 1e-5;
  auto logistic = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const double fd = (logistic(h) - logistic(-h)) / (2.0 * h);

  Tape tape;
  Tensor w = Tensor::scalar(0.0);
  tape.leaf(w);
  Tensor y = sigmoid(w);
  auto grads = tape.backward(y);
  CHECK(grads.at(w.node()).item() == doctest::Approx(fd).epsilon(1e-9));
  CHECK(grads.at(w.node()).item() == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("backward: detached leaf gets zero gradient") {
  Tape tape;
  Tensor x = Tensor::scalar(3.0);
  Tensor y({2}, {1.0, 2.0});
  tape.leaf(x);
  tape.leaf(y);
  Tensor root = mul(x, x);
  auto grads = tape.backward(root);
  CHECK(grads.at(x.node()).item() == doctest::Approx(6.0));
  const Tensor& gy = grads.at(y.node());
  CHECK(gy.at(0) == 0.0);
  CHECK(gy.at(1) == 0.0);
}

TEST_CASE("backward rejects non-scalar roots and foreign tensors") {
  Tape tape;
  Tensor x({2}, {1.0, 2.0});
  tape.leaf(x);
  Tensor y = mul(x, x);
  CHECK_THROWS_AS(tape.backward(y), AdError);
  Tensor stray = Tensor::scalar(1.0);
  CHECK_THROWS_AS(tape.backward(stray), AdError);
}

TEST_CASE("relu subgradient at the kink is zero") {
  Tape tape;
  Tensor x = Tensor::scalar(0.0);
  tape.leaf(x);
  Tensor y = sum_all(relu(x));
  auto grads = tape.backward(y);
  CHECK(grads.at(x.node()).item() == 0.0);
}

TEST_CASE("grad_check: linear function is exact") {
  Rng rng(11);
  Tensor x = random_tensor({4, 3}, rng);
  double err = grad_check([](const Tensor& t) { return sum_all(t); }, x, 1e-5);
  CHECK(err < 1e-10);
}

TEST_CASE("grad_check: every primitive vs central differences") {
  // 100 random smooth inputs across the primitive set, rel. error < 1e-6.
  // Kinked ops (relu, max) get inputs bounded away from their kinks.
  Rng rng(101);
  const double h = 1e-6;
  const double tol = 1e-6;

  for (int trial = 0; trial < 100; ++trial) {
    Tensor w = random_tensor({3, 4}, rng, 0.2, 1.5);  // positive weights for log/pow paths

    auto check = [&](const char* label, const std::function<Tensor(const Tensor&)>& f,
                     const Tensor& x) {
      double err = grad_check(f, x, h);
      INFO(label << " trial " << trial);
      CHECK(err < tol);
    };

    Tensor x = random_tensor({3, 4}, rng);
    Tensor xpos = random_tensor({3, 4}, rng, 0.2, 2.0);
    Tensor xnz = random_nonzero({3, 4}, rng);

    check("add", [&](const Tensor& t) { return sum_all(mul(add(t, w), w)); }, x);
    check("sub", [&](const Tensor& t) { return sum_all(mul(sub(w, t), w)); }, x);
    check("mul", [&](const Tensor& t) { return sum_all(mul(t, w)); }, x);
    check("mul_bcast", [&](const Tensor& t) { return sum_all(mul(t, slice(w, 0, 0, 1))); }, x);
    check("matmul_lhs", [&](const Tensor& t) { return sum_all(matmul(t, transpose2d(w))); }, x);
    check("matmul_rhs", [&](const Tensor& t) { return sum_all(matmul(w, transpose2d(t))); }, x);
    check("relu", [&](const Tensor& t) { return sum_all(mul(relu(t), w)); }, xnz);
    check("sigmoid", [&](const Tensor& t) { return sum_all(mul(sigmoid(t), w)); }, x);
    check("exp", [&](const Tensor& t) { return sum_all(mul(ad::exp(t), w)); }, x);
    check("log", [&](const Tensor& t) { return sum_all(mul(ad::log(t), w)); }, xpos);
    check("sin", [&](const Tensor& t) { return sum_all(mul(ad::sin(t), w)); }, x);
    check("cos", [&](const Tensor& t) { return sum_all(mul(ad::cos(t), w)); }, x);
    check("pow_const", [&](const Tensor& t) { return sum_all(mul(pow_const(t, 1.7), w)); }, xpos);
    check("sum_axis", [&](const Tensor& t) { return sum_all(mul(sum_axis(t, 1), slice(reshape(w, {12}), 0, 0, 3))); }, x);
    check("mean_axis", [&](const Tensor& t) { return sum_all(mul(mean_axis(t, 0), slice(reshape(w, {12}), 0, 0, 4))); }, x);
    check("softmax", [&](const Tensor& t) { return sum_all(mul(softmax_axis(t, 1), w)); }, x);
    check("concat", [&](const Tensor& t) {
      const Tensor parts[2] = {t, w};
      return sum_all(mul(concat_axis(parts, 0), Tensor::scalar(0.5)));
    }, x);
    check("slice", [&](const Tensor& t) { return sum_all(mul(slice(t, 1, 1, 3), Tensor::scalar(2.0))); }, x);
    check("broadcast", [&](const Tensor& t) {
      return sum_all(mul(broadcast_to(reshape(t, {1, 3, 4}), {2, 3, 4}), Tensor::scalar(0.3)));
    }, x);
    check("reshape", [&](const Tensor& t) { return sum_all(mul(reshape(t, {12}), reshape(w, {12}))); }, x);
    check("permute", [&](const Tensor& t) { return sum_all(mul(permute(t, {1, 0}), transpose2d(w))); }, x);
  }

  // max_axis separately, with ties excluded by construction.
  for (int trial = 0; trial < 100; ++trial) {
    Tensor x = Tensor::zeros({3, 4});
    for (std::size_t i = 0; i < 12; ++i) x.data()[i] = 0.1 * static_cast<double>(i) + rng.uniform(0.0, 0.04);
    Tensor w = random_tensor({3}, rng, 0.2, 1.5);
    double err = grad_check(
        [&](const Tensor& t) { return sum_all(mul(max_axis(t, 1), w)); }, x, 1e-6);
    CHECK(err < 1e-6);
  }
}

TEST_CASE("forward evaluation is deterministic") {
  Rng rng1(42), rng2(42);
  Tensor a1 = random_tensor({8, 8}, rng1);
  Tensor a2 = random_tensor({8, 8}, rng2);
  Tensor r1 = softmax_axis(matmul(sigmoid(a1), ad::exp(scale(a1, 0.1))), 1);
  Tensor r2 = softmax_axis(matmul(sigmoid(a2), ad::exp(scale(a2, 0.1))), 1);
  CHECK(std::memcmp(r1.data(), r2.data(), r1.size() * sizeof(double)) == 0);
}

TEST_CASE("tape replay: two roots give independent gradients") {
  Tape tape;
  Tensor x({2}, {1.0, 2.0});
  tape.leaf(x);
  Tensor y1 = sum_all(mul(x, x));
  Tensor y2 = sum_all(mul(mul(x, x), x));

  auto g1a = tape.backward(y1);
  auto g2 = tape.backward(y2);
  auto g1b = tape.backward(y1);

  CHECK(g1a.at(x.node()).at(0) == doctest::Approx(2.0));
  CHECK(g2.at(x.node()).at(0) == doctest::Approx(3.0));
  CHECK(g2.at(x.node()).at(1) == doctest::Approx(12.0));
  CHECK(g1a.at(x.node()).at(0) == g1b.at(x.node()).at(0));
  CHECK(g1a.at(x.node()).at(1) == g1b.at(x.node()).at(1));
}

TEST_CASE("gradients accumulate across shared subexpressions") {
  Tape tape;
  Tensor x = Tensor::scalar(3.0);
  tape.leaf(x);
  Tensor y = add(mul(x, x), mul(x, x));  // 2x^2, dy/dx = 4x
  auto grads = tape.backward(reshape(y, {}));
  CHECK(grads.at(x.node()).item() == doctest::Approx(12.0).epsilon(1e-14));
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "sharpnerf_ckpt_test";
  fs::create_directories(dir);
  const std::string manifest = (dir / "params.manifest").string();
  const std::string data = (dir / "params.f64").string();

  Rng rng(19);
  ParameterStore store;
  store.create("layer0/weight", random_tensor({7, 5}, rng, -3.0, 3.0));
  store.create("layer0/bias", random_tensor({5}, rng));
  store.create("latent", random_tensor({4, 64}, rng, -0.01, 0.01));
  // Values that stress exact float round-tripping.
  Tensor tricky({4}, {1.0 / 3.0, 1e-308, -0.0, 6.02214076e23});
  store.create("tricky", tricky);

  save_store(store, manifest, data);

  ParameterStore loaded;
  loaded.create("layer0/weight", Tensor::zeros({7, 5}));
  loaded.create("layer0/bias", Tensor::zeros({5}));
  loaded.create("latent", Tensor::zeros({4, 64}));
  loaded.create("tricky", Tensor::zeros({4}));
  load_store(loaded, manifest, data);

  for (const auto& name : store.names()) {
    const Tensor& a = store.get(name);
    const Tensor& b = loaded.get(name);
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
  }

  // Shape mismatch and missing parameters are rejected.
  ParameterStore wrong;
  wrong.create("layer0/weight", Tensor::zeros({5, 7}));
  wrong.create("layer0/bias", Tensor::zeros({5}));
  wrong.create("latent", Tensor::zeros({4, 64}));
  wrong.create("tricky", Tensor::zeros({4}));
  CHECK_THROWS_AS(load_store(wrong, manifest, data), AdError);

  fs::remove_all(dir);
}

TEST_CASE("constants never appear as tape nodes") {
  Tape tape;
  Tensor x = Tensor::scalar(2.0);
  tape.leaf(x);
  const std::size_t before = tape.size();
  Tensor c = Tensor::scalar(5.0);  // no leaf registration
  Tensor y = mul(x, c);
  CHECK(tape.size() == before + 1);  // only the mul was recorded
  CHECK(!c.requires_grad());
  auto grads = tape.backward(reshape(y, {}));
  CHECK(grads.at(x.node()).item() == doctest::Approx(5.0));
}
