#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "strata/checkpoint.hpp"
#include "strata/graph.hpp"
#include "strata/optim.hpp"
#include "test_util.hpp"

using namespace strata;
using strata::testing::fill_uniform;
using strata::testing::relative_error;

TEST_CASE("tensor shape invariants") {
  Tensor t({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK_THROWS(Tensor({2, 0}));
  CHECK_THROWS(Tensor({2, 2}, std::vector<double>{1, 2, 3}));
  t.set_requires_grad(true);
  CHECK(t.grad().size() == t.size());
  t[0] = std::nan("");
  CHECK_FALSE(t.all_finite());
}

TEST_SUITE("softmax_masked") {
  TEST_CASE("examples") {
    Graph g;
    CHECK(g.copy(g.softmax_masked(g.constant({2}, {0, 0}), {true, true})) == std::vector<double>{0.5, 0.5});
    CHECK(g.copy(g.softmax_masked(g.constant({1}, {7.3}), {true})) == std::vector<double>{1.0});
    auto p = g.copy(g.softmax_masked(g.constant({3}, {1, 2, 3}), {true, true, true}));
    CHECK(std::abs(p[0] - 0.09003) < 1e-5);
    CHECK(std::abs(p[1] - 0.24473) < 1e-5);
    CHECK(std::abs(p[2] - 0.66524) < 1e-5);
  }

  TEST_CASE("all-masked input is an error") {
    Graph g;
    CHECK_THROWS_WITH(g.softmax_masked(g.constant({2}, {1, 2}), {false, false}), "empty attention support");
    CHECK_THROWS(g.softmax_masked(g.constant({2}, {1, 2}), {true}));
  }

  TEST_CASE("probability vector, masked zeros and shift invariance on random inputs") {
    std::mt19937_64 rng(11);
    std::bernoulli_distribution coin(0.6);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 1 + static_cast<std::size_t>(trial % 17);
      std::vector<double> logits(n);
      fill_uniform(logits, rng, -30, 30);
      std::vector<bool> mask(n);
      for (std::size_t i = 0; i < n; ++i) mask[i] = coin(rng);
      mask[static_cast<std::size_t>(trial) % n] = true;
      Graph g;
      auto p = g.copy(g.softmax_masked(g.constant({n}, logits), mask));
      double total = 0;
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(p[i] >= 0.0);
        if (!mask[i]) CHECK(p[i] == 0.0);
        total += p[i];
      }
      CHECK(std::abs(total - 1.0) <= 1e-9);
      auto shifted = logits;
      for (std::size_t i = 0; i < n; ++i)
        if (mask[i]) shifted[i] += 12.5;
      auto q = g.copy(g.softmax_masked(g.constant({n}, shifted), mask));
      for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(p[i] - q[i]) <= 1e-9);
    }
  }
}

TEST_SUITE("gradients") {
  TEST_CASE("sum of squares") {
    ParameterStore ps;
    Tensor& x = ps.add("x", {2});
    x[0] = 1, x[1] = 2;
    Graph g;
    Var xv = g.parameter(x);
    auto grads = gradients(g, g.sum(g.mul(xv, xv)), ps);
    CHECK(grads["x"] == std::vector<double>{2, 4});
  }

  TEST_CASE("constant loss gives zero gradients") {
    ParameterStore ps;
    Tensor& x = ps.add("x", {3});
    x[0] = 5;
    Graph g;
    g.parameter(x);
    auto grads = gradients(g, g.scalar(3.0), ps);
    CHECK(grads["x"] == std::vector<double>{0, 0, 0});
  }

  TEST_CASE("non-finite loss is rejected") {
    Graph g;
    CHECK_THROWS(g.backward(g.scalar(std::numeric_limits<double>::infinity())));
  }

  TEST_CASE("random 3-layer tanh network against central differences") {
    // 2 -> 3 -> 2 -> 1 with biases: 6+3+6+2+2+1 = 20 parameters.
    ParameterStore ps;
    std::mt19937_64 rng(3);
    for (auto [name, shape] : std::vector<std::pair<std::string, std::vector<std::size_t>>>{
             {"w1", {3, 2}}, {"b1", {3}}, {"w2", {2, 3}}, {"b2", {2}}, {"w3", {1, 2}}, {"b3", {1}}})
      fill_uniform(ps.add(name, shape).data(), rng);
    CHECK(ps.parameter_count() == 20);
    const std::vector<double> input{0.3, -0.7};
    auto build = [&](Graph& g) {
      Var h = g.constant({2}, input);
      h = g.tanh(g.add(g.matvec(g.parameter(ps.get("w1")), h), g.parameter(ps.get("b1"))));
      h = g.tanh(g.add(g.matvec(g.parameter(ps.get("w2")), h), g.parameter(ps.get("b2"))));
      h = g.tanh(g.add(g.matvec(g.parameter(ps.get("w3")), h), g.parameter(ps.get("b3"))));
      return g.sum(h);
    };
    auto r = testing::check_all_gradients(ps, build);
    CHECK(r.checked == 20);
    CHECK_MESSAGE(r.max_rel <= 1e-4, r.worst);
  }

  // One randomized finite-difference trial per (op, shape draw); >= 100 in total.
  TEST_CASE("every primitive passes randomized finite-difference checks") {
    std::mt19937_64 rng(1234);
    std::uniform_int_distribution<std::size_t> dim(1, 5);
    using Builder = std::function<Var(Graph&, Var, Var, Var, std::size_t, std::size_t)>;
    // a: [r,c] matrix, u: [c] vector, w: [r] vector
    const std::vector<std::pair<const char*, Builder>> ops = {
        {"matvec", [](Graph& g, Var a, Var u, Var, auto, auto) { return g.matvec(a, u); }},
        {"matvec_t", [](Graph& g, Var a, Var, Var w, auto, auto) { return g.matvec_t(a, w); }},
        {"matmul_nt", [](Graph& g, Var a, Var, Var, auto, auto) { return g.matmul_nt(a, g.tanh(a)); }},
        {"outer", [](Graph& g, Var, Var u, Var w, auto, auto) { return g.outer(w, u); }},
        {"add_row", [](Graph& g, Var a, Var u, Var, auto, auto) { return g.add_row(a, u); }},
        {"add", [](Graph& g, Var, Var u, Var, auto, auto) { return g.add(u, g.tanh(u)); }},
        {"mul", [](Graph& g, Var, Var u, Var, auto, auto) { return g.mul(u, g.sigmoid(u)); }},
        {"minimum", [](Graph& g, Var, Var u, Var, auto, auto) { return g.minimum(u, g.affine(u, -0.5, 0.1)); }},
        {"scale", [](Graph& g, Var, Var u, Var w, auto, auto) { return g.scale(u, g.pick(w, 0)); }},
        {"affine", [](Graph& g, Var, Var u, Var, auto, auto) { return g.affine(u, -1.7, 0.4); }},
        {"tanh", [](Graph& g, Var, Var u, Var, auto, auto) { return g.tanh(u); }},
        {"sigmoid", [](Graph& g, Var, Var u, Var, auto, auto) { return g.sigmoid(u); }},
        {"relu", [](Graph& g, Var, Var u, Var, auto, auto) { return g.relu(u); }},
        {"log", [](Graph& g, Var, Var u, Var, auto, auto) { return g.log(g.sigmoid(u)); }},
        {"softmax_masked",
         [](Graph& g, Var, Var u, Var, std::size_t, std::size_t c) {
           std::vector<bool> mask(c, true);
           if (c > 1) mask[1] = false;
           return g.softmax_masked(u, mask);
         }},
        {"concat", [](Graph& g, Var, Var u, Var w, auto, auto) { return g.concat({u, w, u}); }},
        {"slice", [](Graph& g, Var, Var u, Var, auto, std::size_t c) { return g.slice(u, c / 2, c - c / 2); }},
        {"stack_rows", [](Graph& g, Var, Var u, Var, auto, auto) {
           std::vector<Var> rows{u, g.tanh(u)};
           return g.stack_rows(rows);
         }},
        {"lookup", [](Graph& g, Var a, Var, Var, std::size_t r, auto) { return g.lookup(a, r - 1); }},
        {"gather",
         [](Graph& g, Var, Var u, Var, auto, std::size_t c) {
           std::vector<std::size_t> idx{0, c - 1, 0};
           return g.gather(u, idx);
         }},
        {"scatter_add",
         [](Graph& g, Var, Var u, Var, auto, std::size_t c) {
           std::vector<std::size_t> idx(c);
           for (std::size_t i = 0; i < c; ++i) idx[i] = (i * 2) % (c + 1);
           return g.scatter_add(u, idx, c + 2);
         }},
        {"sum", [](Graph& g, Var, Var u, Var, auto, auto) { return g.sum(u); }},
        {"add_n", [](Graph& g, Var, Var u, Var w, auto, auto) {
           std::vector<Var> xs{g.pick(u, 0), g.pick(w, 0), g.pick(u, 0)};
           return g.add_n(xs);
         }},
    };
    std::size_t trials = 0;
    for (int round = 0; round < 5; ++round) {
      for (const auto& [name, op] : ops) {
        const std::size_t r = dim(rng), c = dim(rng);
        ParameterStore ps;
        fill_uniform(ps.add("a", {r, c}).data(), rng);
        fill_uniform(ps.add("u", {c}).data(), rng);
        fill_uniform(ps.add("w", {r}).data(), rng);
        // Keep relu/minimum inputs away from their kinks.
        for (double& x : ps.get("u").data())
          if (std::abs(x) < 0.05) x += 0.2;
        std::vector<double> weights(64);
        fill_uniform(weights, rng);
        auto build = [&](Graph& g) {
          Var out = op(g, g.parameter(ps.get("a")), g.parameter(ps.get("u")), g.parameter(ps.get("w")), r, c);
          std::vector<double> wts(weights.begin(), weights.begin() + static_cast<std::ptrdiff_t>(g.size(out)));
          Var flat = g.size(out) == 1 ? out : g.slice(out, 0, g.size(out));
          return g.sum(g.mul(flat, g.constant({wts.size()}, wts)));
        };
        auto res = testing::check_all_gradients(ps, build);
        CHECK_MESSAGE(res.max_rel <= 1e-4, name, ": ", res.worst);
        ++trials;
      }
    }
    CHECK(trials >= 100);
  }
}

TEST_SUITE("adagrad") {
  TEST_CASE("zero gradient is a fixed point") {
    std::vector<double> p{1.5, -2.0}, acc{0.1, 0.1};
    adagrad_step(p, std::vector<double>{0, 0}, acc, 0.15);
    CHECK(p == std::vector<double>{1.5, -2.0});
    CHECK(acc == std::vector<double>{0.1, 0.1});
  }

  TEST_CASE("single and repeated steps") {
    std::vector<double> p{0.0}, acc{0.1};
    adagrad_step(p, std::vector<double>{1.0}, acc, 0.15);
    CHECK(std::abs(acc[0] - 1.1) < 1e-12);
    CHECK(std::abs(p[0] - (-0.14302)) < 1e-5);
    adagrad_step(p, std::vector<double>{1.0}, acc, 0.15);
    CHECK(std::abs(acc[0] - 2.1) < 1e-12);
  }

  TEST_CASE("configuration errors") {
    std::vector<double> p{0.0}, acc{0.1};
    CHECK_THROWS(adagrad_step(p, std::vector<double>{1.0}, acc, 0.0));
    CHECK_THROWS(adagrad_step(p, std::vector<double>{1.0, 2.0}, acc, 0.1));
    CHECK_THROWS(AdagradState(-1.0, 0.1));
  }

  TEST_CASE("accumulators never decrease and stay above the initial value") {
    ParameterStore ps;
    ps.add("x", {10});
    AdagradState st(0.15, 0.1);
    st.init(ps);
    std::mt19937_64 rng(5);
    auto prev = st.accumulator[0];
    for (int step = 0; step < 50; ++step) {
      fill_uniform(ps.get("x").grad(), rng, -3, 3);
      adagrad_step(ps, st);
      for (std::size_t i = 0; i < prev.size(); ++i) {
        CHECK(st.accumulator[0][i] >= prev[i]);
        CHECK(st.accumulator[0][i] >= 0.1);
      }
      prev = st.accumulator[0];
    }
  }

  TEST_CASE("global norm clipping") {
    ParameterStore ps;
    auto& a = ps.add("a", {2});
    a.grad()[0] = 3, a.grad()[1] = 4;
    CHECK(clip_grad_norm(ps, 2.0) == doctest::Approx(5.0));
    CHECK(global_grad_norm(ps) == doctest::Approx(2.0));
    CHECK(clip_grad_norm(ps, 10.0) == doctest::Approx(2.0));
    CHECK(global_grad_norm(ps) == doctest::Approx(2.0));
  }
}

TEST_SUITE("checkpoint") {
  TEST_CASE("round trip preserves names, shapes, payload, optimizer and metadata") {
    ParameterStore ps;
    std::mt19937_64 rng(9);
    fill_uniform(ps.add("embedding", {4, 3}).data(), rng);
    fill_uniform(ps.add("bias", {5}).data(), rng);
    AdagradState st(0.15, 0.1);
    st.init(ps);
    st.accumulator[1][2] = 7.25;
    auto path = std::filesystem::temp_directory_path() / "strata_ckpt_roundtrip.bin";
    save_checkpoint(path, 42, {{"hidden", "8"}, {"coverage", "true"}}, ps, &st);
    auto ck = load_checkpoint(path);
    CHECK(ck.step == 42);
    CHECK(ck.metadata.at("hidden") == "8");
    CHECK(ck.names == std::vector<std::string>{"embedding", "bias"});
    REQUIRE(ck.optimizer.has_value());
    CHECK(ck.optimizer->accumulator[1][2] == 7.25);
    CHECK(ck.optimizer->learning_rate == 0.15);
    ParameterStore other;
    other.add("embedding", {4, 3});
    other.add("bias", {5});
    restore_parameters(ck, other);
    for (std::size_t i = 0; i < 2; ++i) {
      auto a = ps.at(i).data();
      auto b = other.at(i).data();
      CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
    ParameterStore wrong;
    wrong.add("embedding", {4, 4});
    wrong.add("bias", {5});
    CHECK_THROWS(restore_parameters(ck, wrong));
    std::filesystem::remove(path);
  }

  TEST_CASE("little-endian header layout") {
    ParameterStore ps;
    ps.add("x", {1})[0] = 1.0;
    auto path = std::filesystem::temp_directory_path() / "strata_ckpt_layout.bin";
    save_checkpoint(path, 1, {}, ps, nullptr);
    std::ifstream is(path, std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), {});
    REQUIRE(bytes.size() == 8 + 4 + 8 + 8 + 4 + (4 + 1) + 4 + 8 + 8 + 1);
    CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "STRATACK");
    CHECK(bytes[8] == 1);   // version
    CHECK(bytes[12] == 1);  // step
    // payload 1.0 = 0x3FF0000000000000, little-endian
    const std::size_t payload = 8 + 4 + 8 + 8 + 4 + 5 + 4 + 8;
    CHECK(bytes[payload + 7] == 0x3F);
    CHECK(bytes[payload + 6] == 0xF0);
    CHECK(bytes.back() == 0);  // no optimizer
    std::filesystem::remove(path);
  }

  TEST_CASE("truncated or foreign files are rejected") {
    auto path = std::filesystem::temp_directory_path() / "strata_ckpt_bad.bin";
    std::ofstream(path, std::ios::binary) << "NOTACKPT";
    CHECK_THROWS(load_checkpoint(path));
    std::ofstream(path, std::ios::binary) << "STRATACK";
    CHECK_THROWS(load_checkpoint(path));
    std::filesystem::remove(path);
    CHECK_THROWS_WITH(load_checkpoint(path), doctest::Contains("checkpoint not found"));
  }
}
