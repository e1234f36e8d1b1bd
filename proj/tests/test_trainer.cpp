#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>

#include <json.hpp>

#include "gard/trainer.hpp"
#include "test_util.hpp"

using namespace gard;

namespace {

std::vector<std::size_t> all_steps(std::size_t n) {
  std::vector<std::size_t> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = i + 1;
  return t;
}

// sigma_{t+1..n} in ascending order: the nodes still present when sigma_t is predicted
std::vector<NodeId> context_after(const std::vector<NodeId>& sigma, std::size_t t) {
  std::vector<NodeId> c(sigma.begin() + static_cast<std::ptrdiff_t>(t), sigma.end());
  std::sort(c.begin(), c.end());
  return c;
}

// Step probability computed straight from the prediction tables.
double step_probability(const Denoiser& d, const LabeledGraph& g, const std::vector<NodeId>& ctx, NodeId target) {
  const auto pred = predict_step(d, make_view(g, ctx, target, d.mask_token()));
  double p = pred.node_probs[static_cast<std::size_t>(g.node_type(target))];
  if (ctx.empty()) return p;
  double mix = 0.0;
  for (std::size_t k = 0; k < pred.mixture.size(); ++k) {
    double prod = pred.mixture[k];
    for (std::size_t j = 0; j < ctx.size(); ++j) prod *= pred.edge_prob(k, j, g.edge_type(ctx[j], target));
    mix += prod;
  }
  return p * mix;
}

std::vector<LabeledGraph> small_corpus(std::uint64_t seed, std::size_t count) {
  Rng rng(seed);
  std::vector<LabeledGraph> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(test::random_graph(rng, 3 + uniform_index(rng, 3), 0.5));
  return out;
}

TrainConfig quick_train(std::uint64_t seed) {
  TrainConfig c;
  c.trajectories = 2;
  c.train_batch = 2;
  c.val_batch = 2;
  c.epochs = 2;
  c.denoiser_lr = 1e-2;
  c.ordering_lr = 1e-2;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("timestep sampling") {
  Rng rng(1);
  std::vector<int> hits(6, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const auto ts = sample_timesteps(5, 2, rng);
    REQUIRE(ts.size() == 2);
    CHECK(ts[0] < ts[1]);
    CHECK(ts[0] >= 1);
    CHECK(ts[1] <= 5);
    for (auto t : ts) ++hits[t];
  }
  const double p = 0.4, sd = std::sqrt(p * (1 - p) / draws);
  for (std::size_t t = 1; t <= 5; ++t) CHECK(std::abs(hits[t] / static_cast<double>(draws) - p) < 3 * sd);
  CHECK(sample_timesteps(3, 3, rng) == std::vector<std::size_t>{1, 2, 3});
  CHECK_THROWS(sample_timesteps(3, 0, rng));
  CHECK_THROWS(sample_timesteps(3, 4, rng));

  TrainConfig c;
  CHECK(default_timesteps(2, c) == 2);
  CHECK(default_timesteps(9, c) == 4);
  c.timesteps = 6;
  CHECK(default_timesteps(9, c) == 6);
}

TEST_CASE("train config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.trajectories = 0;
  CHECK_THROWS(c.validate());
  c = {};
  c.ordering_lr = 0.0;
  CHECK_THROWS(c.validate());
  c = {};
  c.val_batch = 0;
  CHECK_THROWS(c.validate());
  c = {};
  c.baseline_decay = 1.0;
  CHECK_THROWS(c.validate());
}

TEST_CASE("denoiser loss") {
  Rng rng(2);
  const auto bundle = ModelBundle::create(test::tiny_config(2, 3, 7));
  const Denoiser& d = bundle.denoiser;

  SUBCASE("sampled node with weight one") {
    const auto g = test::random_graph(rng, 6, 0.5, 2, 3);
    const auto sigma = random_permutation(6, rng);
    const auto traj = forward_trajectory(g, sigma);
    const std::vector<std::size_t> ts = {2, 3, 6};
    double expected = 0.0;
    for (auto t : ts) expected += std::log(step_probability(d, g, context_after(sigma, t), sigma[t - 1]));
    expected *= -6.0 / 3.0;
    nn::Tape tape(&d.parameters(), false);
    CHECK(denoiser_loss(tape, d, g, traj, ts).item() == doctest::Approx(expected).epsilon(1e-12));
    // an explicit single-candidate soft label is the same thing
    auto weighted = traj;
    for (std::size_t t = 0; t < 6; ++t) weighted.step_weights.push_back({{sigma[t], 1.0}});
    CHECK(compute_reward(d, g, weighted, ts) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("one node with one type") {
    const auto one = ModelBundle::create(test::tiny_config(1, 2, 3));
    const auto g = make_simple_graph(1, {});
    const std::vector<std::size_t> ts = {1};
    CHECK(compute_reward(one.denoiser, g, forward_trajectory(g, std::vector<NodeId>{0}), ts) == 0.0);
  }
  SUBCASE("two nodes, every step") {
    const std::vector<TypedEdge> e = {{0, 1, 2}};
    const auto g = LabeledGraph::create({1, 0}, e);
    for (const auto& sigma : test::all_orderings(2)) {
      // -log p(sigma_1 | {sigma_2}) - log p(sigma_2 | {})
      const double nll = -std::log(step_probability(d, g, {sigma[1]}, sigma[0])) -
                         std::log(step_probability(d, g, {}, sigma[1]));
      CHECK(compute_reward(d, g, forward_trajectory(g, sigma), all_steps(2)) == doctest::Approx(nll).epsilon(1e-12));
    }
  }
  SUBCASE("soft label mixes candidates by weight") {
    const auto g = test::random_graph(rng, 4, 0.5, 2, 3);
    const std::vector<NodeId> sigma = {2, 0, 3, 1};
    auto traj = forward_trajectory(g, sigma);
    traj.step_weights.resize(4);
    for (std::size_t t = 0; t < 4; ++t) traj.step_weights[t] = {{sigma[t], 1.0}};
    traj.step_weights[0] = {{2, 0.75}, {1, 0.25}};
    const std::vector<std::size_t> ts = {1};
    const double expected = -4.0 * (0.75 * std::log(step_probability(d, g, {0, 1, 3}, 2)) +
                                    0.25 * std::log(step_probability(d, g, {0, 2, 3}, 1)));
    CHECK(compute_reward(d, g, traj, ts) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("errors") {
    const auto g = test::path_graph(3);
    const auto traj = forward_trajectory(g, std::vector<NodeId>{0, 1, 2});
    nn::Tape tape(&d.parameters(), false);
    CHECK_THROWS(denoiser_loss(tape, d, g, traj, {}));
    const std::vector<std::size_t> bad = {4};
    CHECK_THROWS(denoiser_loss(tape, d, g, traj, bad));
  }
}

TEST_CASE("rewards") {
  SUBCASE("uniform head on two types gives ln 2") {
    auto b = ModelBundle::create(test::tiny_config(2, 2, 5));
    test::saturate(b.denoiser, "node_head", 0, 1, 0.0);
    const auto g = LabeledGraph::create({1}, {});
    const std::vector<std::size_t> ts = {1};
    CHECK(compute_reward(b.denoiser, g, forward_trajectory(g, std::vector<NodeId>{0}), ts) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-14));
  }
  SUBCASE("a model certain of the truth earns zero") {
    auto b = ModelBundle::create(test::tiny_config(2, 2, 5));
    test::saturate(b.denoiser, "node_head", 1, 2, 80.0);
    test::saturate(b.denoiser, "edge_head", 1, 2, 80.0);
    const auto g = LabeledGraph::create({1, 1, 1}, std::vector<TypedEdge>{{0, 1, 1}, {1, 2, 1}, {0, 2, 1}});
    for (const auto& sigma : test::all_orderings(3))
      CHECK(std::abs(compute_reward(b.denoiser, g, forward_trajectory(g, sigma), all_steps(3))) < 1e-12);
  }
  SUBCASE("reward equals the loss value") {
    Rng rng(3);
    const auto b = ModelBundle::create(test::tiny_config(2, 3, 8));
    for (int rep = 0; rep < 5; ++rep) {
      const auto g = test::random_graph(rng, 5, 0.5, 2, 3);
      const auto traj = sample_trajectory(b.ordering, g, rng, 3);
      const auto ts = sample_timesteps(5, 3, rng);
      nn::Tape tape(&b.denoiser.parameters());
      CHECK(std::abs(compute_reward(b.denoiser, g, traj, ts) - denoiser_loss(tape, b.denoiser, g, traj, ts).item()) <
            1e-12);
    }
  }
}

TEST_CASE("loss is invariant under relabeling") {
  Rng rng(4);
  const auto b = ModelBundle::create(test::tiny_config(3, 3, 9));
  for (int rep = 0; rep < 10; ++rep) {
    const auto g = test::random_graph(rng, 6, 0.5, 3, 3);
    const auto sigma = random_permutation(6, rng);
    const auto pi = random_permutation(6, rng);
    std::vector<NodeId> mapped(6);
    for (std::size_t t = 0; t < 6; ++t) mapped[t] = pi[sigma[t]];
    const auto ts = sample_timesteps(6, 4, rng);
    const double a = compute_reward(b.denoiser, g, forward_trajectory(g, sigma), ts);
    const auto h = permute(g, pi);
    const double c = compute_reward(b.denoiser, h, forward_trajectory(h, mapped), ts);
    CHECK(std::abs(a - c) < 1e-9);
  }
}

TEST_CASE("denoiser loss gradient") {
  Rng rng(5);
  auto b = ModelBundle::create(test::tiny_config(2, 3, 10));
  const auto g = test::random_graph(rng, 4, 0.5, 2, 3);
  const auto traj = sample_trajectory(b.ordering, g, rng, 2);
  const std::vector<std::size_t> ts = {1, 3};
  const auto loss = [&](nn::Tape& t) { return denoiser_loss(t, b.denoiser, g, traj, ts); };
  // the loss sits near 10, so small steps leave coordinates with gradients
  // near 1e-8 resolved only to roundoff
  CHECK(nn::grad_check(loss, b.denoiser.parameters(), 1e-2) < 1e-4);
}

TEST_CASE("batch gradients are additive") {
  // on single-type complete graphs every ordering yields the same views, and
  // with T = n the loss does not depend on the random stream at all
  auto cfg = test::tiny_config(1, 2, 11);
  cfg.ordering_mode = OrderingMode::kUniform;
  const auto b = ModelBundle::create(cfg);
  TrainConfig tc;
  tc.timesteps = 10;
  const auto A = test::complete_graph(3), B = test::complete_graph(4);
  const std::vector<const LabeledGraph*> ab = {&A, &B}, a = {&A}, bb = {&B};

  const auto both = denoiser_batch_gradient(b, ab, 1, 1, tc, 0);
  const auto ga = denoiser_batch_gradient(b, a, 1, 1, tc, 0);
  const auto gb = denoiser_batch_gradient(b, bb, 1, 1, tc, 7);
  auto sum = nn::zero_gradients(b.denoiser.parameters());
  nn::accumulate(sum, ga.grads);
  nn::accumulate(sum, gb.grads);
  CHECK(both.grads == sum);
  CHECK(both.loss == ga.loss + gb.loss);

  // and a single item is the plain backward pass of its loss
  nn::Tape tape(&b.denoiser.parameters());
  const auto direct = tape.backward(
      denoiser_loss(tape, b.denoiser, A, forward_trajectory(A, std::vector<NodeId>{0, 1, 2}), all_steps(3)));
  CHECK(ga.grads == direct);

  // identical Adam steps follow
  auto s1 = b, s2 = b;
  nn::adam_step(s1.denoiser.parameters(), both.grads, s1.denoiser_opt);
  nn::adam_step(s2.denoiser.parameters(), sum, s2.denoiser_opt);
  CHECK(s1.denoiser.parameters() == s2.denoiser.parameters());

  SUBCASE("trajectories are averaged") {
    const auto m3 = denoiser_batch_gradient(b, a, 3, 1, tc, 0);
    for (std::size_t i = 0; i < m3.grads.size(); ++i)
      for (std::size_t k = 0; k < m3.grads[i].size(); ++k)
        CHECK(m3.grads[i][k] == doctest::Approx(ga.grads[i][k]).epsilon(1e-12));
    CHECK(m3.loss == doctest::Approx(ga.loss).epsilon(1e-12));
  }
}

TEST_CASE("reinforce") {
  const std::vector<TypedEdge> e = {{0, 1, 1}};
  const auto g = LabeledGraph::create({0, 1}, e);

  SUBCASE("equal rewards at the baseline leave the net unchanged") {
    auto b = ModelBundle::create(test::tiny_config(2, 2, 12));
    const auto before = b.ordering.parameters();
    std::vector<ReinforceSample> s = {{&g, {0, 1}, 1.5}, {&g, {1, 0}, 1.5}, {&g, {0, 1}, 1.5}};
    CHECK(nn::max_abs(reinforce_gradient(b.ordering, s, 1.5)) == 0.0);
    reinforce_update(b.ordering, b.ordering_opt, s, 1.5);
    CHECK(b.ordering.parameters() == before);
    CHECK_THROWS(reinforce_gradient(b.ordering, {}, 0.0));
  }

  SUBCASE("batch gradient is the mean of weighted score functions") {
    const auto b = ModelBundle::create(test::tiny_config(2, 2, 13));
    std::vector<ReinforceSample> s = {{&g, {0, 1}, 2.0}, {&g, {1, 0}, 0.5}};
    const auto grad = reinforce_gradient(b.ordering, s, 1.0);
    nn::Tape t1(&b.ordering.parameters()), t2(&b.ordering.parameters());
    const auto g01 = t1.backward(ordering_log_prob(t1, b.ordering, g, std::vector<NodeId>{0, 1}));
    const auto g10 = t2.backward(ordering_log_prob(t2, b.ordering, g, std::vector<NodeId>{1, 0}));
    for (std::size_t i = 0; i < grad.size(); ++i)
      for (std::size_t k = 0; k < grad[i].size(); ++k)
        CHECK(grad[i][k] == doctest::Approx(0.5 * (1.0 * g01[i][k] - 0.5 * g10[i][k])).epsilon(1e-12));
  }
}

TEST_CASE("reinforce estimator is unbiased") {
  for (std::size_t n : {2u, 3u}) {
    CAPTURE(n);
    Rng rng(20 + n);
    const auto b = ModelBundle::create(test::tiny_config(2, 2, 14 + n));
    const auto g = test::random_graph(rng, n, 0.6, 2, 2);
    const double baseline = 0.3;

    // per-ordering reward, probability and score function by enumeration
    std::map<std::vector<NodeId>, std::pair<double, nn::Gradients>> table;
    auto exact = nn::zero_gradients(b.ordering.parameters());
    for (const auto& sigma : test::all_orderings(n)) {
      const double r = compute_reward(b.denoiser, g, forward_trajectory(g, sigma), all_steps(n));
      nn::Tape tape(&b.ordering.parameters());
      auto score = tape.backward(ordering_log_prob(tape, b.ordering, g, sigma));
      nn::accumulate(exact, score, std::exp(ordering_log_prob_value(b.ordering, g, sigma)) * (r - baseline));
      table[sigma] = {r, std::move(score)};
    }

    const int draws = 50000;
    auto sum = nn::zero_gradients(b.ordering.parameters());
    auto sq = sum;
    for (int m = 0; m < draws; ++m) {
      const auto& [r, score] = table.at(sample_trajectory(b.ordering, g, rng).ordering);
      for (std::size_t i = 0; i < sum.size(); ++i)
        for (std::size_t k = 0; k < sum[i].size(); ++k) {
          const double x = (r - baseline) * score[i][k];
          sum[i][k] += x;
          sq[i][k] += x * x;
        }
    }
    // n = 2 holds to 3 standard errors; n = 3 has six outcomes and many more
    // effectively independent coordinates, so 4 keeps the family-wise rate low
    const double z = n == 2 ? 3.0 : 4.0;
    std::size_t worse = 0;
    for (std::size_t i = 0; i < sum.size(); ++i)
      for (std::size_t k = 0; k < sum[i].size(); ++k) {
        const double mean = sum[i][k] / draws;
        const double se = std::sqrt(std::max(0.0, sq[i][k] / draws - mean * mean) / draws);
        if (std::abs(mean - exact[i][k]) > z * se + 1e-12) ++worse;
      }
    CHECK(worse == 0);
  }
}

TEST_CASE("reinforce favors the lower-reward ordering") {
  auto b = ModelBundle::create(test::tiny_config(2, 2, 30), 1e-4, 0.05);
  const auto g = LabeledGraph::create({0, 1}, {});
  const std::vector<NodeId> good = {0, 1};
  Rng rng(31);
  const double p0 = std::exp(ordering_log_prob_value(b.ordering, g, good));
  double baseline = 0.0;
  for (int step = 0; step < 200; ++step) {
    std::vector<ReinforceSample> s;
    double mean = 0.0;
    for (int m = 0; m < 4; ++m) {
      auto sigma = sample_trajectory(b.ordering, g, rng).ordering;
      const double r = sigma == good ? 0.0 : 1.0;
      mean += r / 4;
      s.push_back({&g, std::move(sigma), r});
    }
    reinforce_update(b.ordering, b.ordering_opt, s, step == 0 ? 0.0 : baseline);
    baseline = step == 0 ? mean : 0.9 * baseline + 0.1 * mean;
  }
  const double p = std::exp(ordering_log_prob_value(b.ordering, g, good));
  CHECK(p0 < 0.9);
  CHECK(p > 0.9);
}

TEST_CASE("fit") {
  const auto train = small_corpus(40, 6);
  const auto val = small_corpus(41, 2);
  const auto mc = test::tiny_config(1, 2, 42);

  SUBCASE("zero epochs return the initial parameters") {
    auto tc = quick_train(1);
    tc.epochs = 0;
    const auto init = ModelBundle::create(mc, tc.denoiser_lr, tc.ordering_lr);
    const auto r = fit(train, val, tc, mc);
    CHECK(r.model.denoiser.parameters() == init.denoiser.parameters());
    CHECK(r.model.ordering.parameters() == init.ordering.parameters());
    CHECK(r.model.step == 0);
    CHECK(r.report.epochs.empty());
  }
  SUBCASE("identical seeds give identical runs") {
    const auto tc = quick_train(2);
    const auto r1 = fit(train, val, tc, mc);
    const auto r2 = fit(train, val, tc, mc);
    REQUIRE(r1.report.epochs.size() == 2);
    REQUIRE(r2.report.epochs.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(r1.report.epochs[i].epoch == i);
      CHECK(r1.report.epochs[i].steps == r2.report.epochs[i].steps);
      CHECK(r1.report.epochs[i].mean_loss == r2.report.epochs[i].mean_loss);
      CHECK(r1.report.epochs[i].mean_reward == r2.report.epochs[i].mean_reward);
    }
    CHECK(r1.report.epochs[1].steps == 6);
    CHECK(r1.report.checkpoint_steps == r2.report.checkpoint_steps);
    CHECK(r1.report.checkpoint_steps == std::vector<std::size_t>{3, 6});
    CHECK(r1.model.denoiser.parameters() == r2.model.denoiser.parameters());
    CHECK(r1.model.ordering.parameters() == r2.model.ordering.parameters());

    auto other = tc;
    other.seed = 3;
    CHECK_FALSE(fit(train, val, other, mc).model.denoiser.parameters() == r1.model.denoiser.parameters());
  }
  SUBCASE("both networks move; no validation freezes the ordering net") {
    const auto tc = quick_train(4);
    const auto init = ModelBundle::create(mc, tc.denoiser_lr, tc.ordering_lr);
    const auto r = fit(train, val, tc, mc);
    CHECK_FALSE(r.model.denoiser.parameters() == init.denoiser.parameters());
    CHECK_FALSE(r.model.ordering.parameters() == init.ordering.parameters());
    CHECK(std::isfinite(r.report.epochs[0].mean_reward));
    const auto frozen = fit(train, {}, tc, mc);
    CHECK(frozen.model.ordering.parameters() == init.ordering.parameters());
    CHECK(std::isnan(frozen.report.epochs[0].mean_reward));
  }
  SUBCASE("log and checkpoints on disk") {
    const auto dir = std::filesystem::temp_directory_path() / "gard_fit_test";
    std::filesystem::remove_all(dir);
    auto tc = quick_train(5);
    tc.eval_every = 2;
    tc.max_steps = 5;
    tc.log_path = dir / "log.jsonl";
    tc.checkpoint_dir = dir / "ckpt";
    std::filesystem::create_directories(dir);
    const auto r = fit(train, val, tc, mc);
    CHECK(r.model.step == 5);
    CHECK(r.report.checkpoint_steps == std::vector<std::size_t>{2, 4, 5});
    REQUIRE(r.report.checkpoint_paths.size() == 3);
    const auto back = load_model(r.report.checkpoint_paths.back());
    CHECK(back.denoiser.parameters() == r.model.denoiser.parameters());
    CHECK(back.step == 5);
    std::ifstream in(tc.log_path);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
      const auto j = nlohmann::json::parse(line);
      CHECK(j.at("step").get<std::size_t>() == ++lines);
      CHECK(j.contains("loss"));
      CHECK(j.contains("reward"));
      CHECK(j.contains("timestamp"));
    }
    CHECK(lines == 5);
    std::filesystem::remove_all(dir);
  }
  SUBCASE("errors") {
    const auto tc = quick_train(6);
    CHECK_THROWS(fit({}, val, tc, mc));
    auto bad = ModelBundle::create(mc);
    auto& w = bad.denoiser.parameters()[0].value;
    std::fill(w.storage().begin(), w.storage().end(), std::numeric_limits<double>::quiet_NaN());
    CHECK_THROWS_AS(fit(train, val, tc, std::move(bad)), TrainingDiverged);
  }
}

TEST_CASE("model selection") {
  const auto mc = test::tiny_config(1, 2, 50);
  std::vector<LabeledGraph> val;
  for (std::size_t n : {4u, 5u, 6u}) val.push_back(make_simple_graph(n, {}));

  const auto noisy = ModelBundle::create(mc);
  auto exact = noisy;
  // never emits an edge, so it reproduces the edgeless validation graphs
  test::saturate(exact.denoiser, "edge_head", 0, 2, 80.0);

  std::vector<ModelBundle> one = {noisy};
  CHECK(select_model(one, val, 8, 1) == 0);
  CHECK(select_model(one, {}, 8, 1) == 0);
  CHECK_THROWS(select_model({}, val, 8, 1));

  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    std::vector<ModelBundle> pair = {noisy, exact};
    CHECK(select_model(pair, val, 16, seed) == 1);
    std::vector<ModelBundle> swapped = {exact, noisy};
    CHECK(select_model(swapped, val, 16, seed) == 0);
  }
}
