#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "scalar_ppo.hpp"
#include "zmlloco/learn/trainer.hpp"

using namespace zmlloco;

namespace {

RolloutBuffer random_buffer(int T, int N, int K, Rng& rng, double done_p = 0.1) {
  RolloutBuffer b(T, N, K, 3, 4, 2);
  for (Eigen::Index i = 0; i < b.rewards.size(); ++i) b.rewards.data()[i] = rng.uniform(-1, 1);
  for (Eigen::Index i = 0; i < b.values.size(); ++i) b.values.data()[i] = rng.uniform(-2, 2);
  for (Eigen::Index i = 0; i < b.last_values.size(); ++i) b.last_values.data()[i] = rng.uniform(-2, 2);
  for (auto& d : b.dones) d = rng.uniform() < done_p ? 1 : 0;
  return b;
}

SignedPermutation small_obs_map() { return {{1, 0, 2, 3}, {1.0, 1.0, -1.0, 1.0}}; }
SignedPermutation small_action_map() { return {{1, 0, 2}, {1.0, 1.0, -1.0}}; }

MatX as_matrix(const SignedPermutation& p) { return p.apply(MatX::Identity(p.size(), p.size())); }

template <typename Net>
void randomize(Net& net, Rng& rng, double scale = 0.5) {
  for (Eigen::Index i = 0; i < net.params().size(); ++i) net.params()(i) = rng.uniform(-scale, scale);
}

MatX random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  MatX m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
  return m;
}

}  // namespace

TEST(ValueTargets, SingleHeadMatchesScalarGae) {
  Rng rng(1);
  RolloutBuffer b = random_buffer(24, 7, 1, rng);
  value_targets(b, 0.99, 0.95);
  const test::ScalarGae ref = test::scalar_gae(b.rewards.row(0).transpose(), b.values.row(0).transpose(),
                                   b.last_values.row(0).transpose(), b.dones, 24, 7, 0.99, 0.95);
  EXPECT_LT((b.advantages - ref.advantages).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((b.returns.row(0).transpose() - ref.returns).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ValueTargets, MultiHeadAdvantageMatchesSummedStream) {
  Rng rng(2);
  RolloutBuffer b = random_buffer(24, 9, 5, rng);
  value_targets(b, 0.99, 0.95);
  const test::ScalarGae ref = test::scalar_gae(b.rewards.colwise().sum().transpose(), b.values.colwise().sum().transpose(),
                                   b.last_values.colwise().sum().transpose(), b.dones, 24, 9, 0.99, 0.95);
  EXPECT_LT((b.advantages - ref.advantages).cwiseAbs().maxCoeff(), 1e-10);
  for (int k = 0; k < 5; ++k) {
    const test::ScalarGae head = test::scalar_gae(b.rewards.row(k).transpose(), b.values.row(k).transpose(),
                                      b.last_values.row(k).transpose(), b.dones, 24, 9, 0.99, 0.95);
    EXPECT_LT((b.returns.row(k).transpose() - head.returns).cwiseAbs().maxCoeff(), 1e-12) << "head " << k;
  }
}

TEST(ValueTargets, HeadSumTdIdentity) {
  Rng rng(3);
  const RolloutBuffer b = random_buffer(10, 4, kNumRewardTerms, rng);
  const double gamma = 0.99;
  for (int t = 0; t + 1 < b.horizon; ++t) {
    for (int e = 0; e < b.num_envs; ++e) {
      const int i = b.index(t, e), j = b.index(t + 1, e);
      double per_head = 0.0;
      for (int k = 0; k < b.heads; ++k) per_head += b.rewards(k, i) + gamma * b.values(k, j);
      const double total = b.rewards.col(i).sum() + gamma * b.values.col(j).sum();
      ASSERT_LT(std::abs(per_head - total), 1e-12);
    }
  }
}

TEST(ValueTargets, TerminalZeroesBootstrap) {
  RolloutBuffer b(1, 1, 2, 1, 1, 1);
  b.rewards << 1.0, 2.0;
  b.values << 0.5, 0.25;
  b.last_values << 100.0, 100.0;
  b.dones[0] = 1;
  value_targets(b, 0.99, 0.95);
  EXPECT_EQ(b.returns(0, 0), 1.0);
  EXPECT_EQ(b.returns(1, 0), 2.0);
  EXPECT_EQ(b.advantages(0), 3.0 - 0.75);
}

TEST(ValueTargets, ReweightingOneTermLeavesAdvantagesUnchanged) {
  Rng rng(4);
  RolloutBuffer a = random_buffer(16, 5, kNumRewardTerms, rng);
  RolloutBuffer b = a;
  RewardConfig w;
  const MatX raw = random_matrix(kNumRewardTerms, a.size(), rng);
  const double c = 7.3;
  for (int i = 0; i < a.size(); ++i) {
    for (int k = 0; k < kNumRewardTerms; ++k) {
      a.rewards(k, i) = w.weights[k] * raw(k, i);
      b.rewards(k, i) = k == kZmp ? (w.weights[k] / c) * (c * raw(k, i)) : a.rewards(k, i);
    }
  }
  value_targets(a, 0.99, 0.95);
  value_targets(b, 0.99, 0.95);
  EXPECT_LT((a.advantages - b.advantages).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ValueLoss, ExactTargetsGiveZero) {
  Rng rng(5);
  ValueNet<double> v(4, {8}, 3);
  v.net.init(rng);
  const MatX obs = random_matrix(4, 10, rng);
  EXPECT_EQ(value_loss<double>(v, obs, v.values(obs)), 0.0);
}

TEST(ValueLoss, AdditiveOverHeads) {
  Rng rng(6);
  const MatX values = random_matrix(2, 12, rng);
  MatX targets = values;
  targets.row(1) += random_matrix(1, 12, rng);
  const double head1 = (values.row(1) - targets.row(1)).squaredNorm() / 12.0;
  EXPECT_NEAR(value_loss_terms<double>(values, targets, nullptr), head1, 1e-15);
}

TEST(ValueLoss, MatchesLoopOracle) {
  Rng rng(7);
  ValueNet<double> v(4, {6, 5}, 3);
  v.net.init(rng);
  const MatX obs = random_matrix(4, 9, rng);
  const MatX targets = random_matrix(3, 9, rng);
  const MatX out = v.values(obs);
  long double sum = 0.0L;
  for (int k = 0; k < 3; ++k) {
    long double head = 0.0L;
    for (int i = 0; i < 9; ++i) head += static_cast<long double>(out(k, i) - targets(k, i)) * (out(k, i) - targets(k, i));
    sum += head / 9.0L;
  }
  EXPECT_NEAR(value_loss<double>(v, obs, targets), static_cast<double>(sum), 1e-10);
}

TEST(SymmetryLoss, ZeroForTiedEquivariantNetworks) {
  Rng rng(8);
  const SignedPermutation G = small_obs_map(), A = small_action_map();
  const MatX Gm = as_matrix(G), Am = as_matrix(A);
  // Hidden layer invariant to G, output layer in the fixed space of A.
  PolicyNet<double> pi(4, {6}, 3);
  randomize(pi.net, rng);
  pi.net.weight(0) = 0.5 * (pi.net.weight(0) + pi.net.weight(0) * Gm);
  pi.net.weight(1) = 0.5 * (pi.net.weight(1) + Am * pi.net.weight(1));
  pi.net.bias(1) = 0.5 * (pi.net.bias(1) + Am * pi.net.bias(1));
  ValueNet<double> v(4, {5}, 3);
  randomize(v.net, rng);
  v.net.weight(0) = 0.5 * (v.net.weight(0) + v.net.weight(0) * Gm);
  // A linear policy tied by W = (W0 + A W0 G) / 2.
  PolicyNet<double> lin(4, {}, 3);
  randomize(lin.net, rng);
  lin.net.weight(0) = 0.5 * (lin.net.weight(0) + Am * lin.net.weight(0) * Gm);
  lin.net.bias(0) = 0.5 * (lin.net.bias(0) + Am * lin.net.bias(0));

  SymmetryInputs<double> in;
  in.obs = in.critic_obs = random_matrix(4, 16, rng);
  in.obs_mirror = in.critic_obs_mirror = G.apply(in.obs);
  EXPECT_LT(symmetry_loss<double>(pi, v, in, A), 1e-24);
  EXPECT_LT(symmetry_loss<double>(lin, v, in, A), 1e-24);
}

TEST(SymmetryLoss, SymmetricStatesZeroTheValueTerm) {
  Rng rng(9);
  const SignedPermutation G = small_obs_map(), A = small_action_map();
  PolicyNet<double> pi(4, {6}, 3);
  ValueNet<double> v(4, {6}, 2);
  pi.net.init(rng);
  v.net.init(rng);
  const MatX x = random_matrix(4, 12, rng);
  const MatX s = 0.5 * (x + G.apply(x));
  const auto t = symmetry_terms<double>(pi.mean(s), pi.mean(G.apply(s)), v.values(s), v.values(G.apply(s)), A);
  EXPECT_EQ(t.value, 0.0);
}

TEST(SymmetryLoss, MatchesExplicitMirroringOracle) {
  Rng rng(10);
  const SignedPermutation G = small_obs_map(), A = small_action_map();
  PolicyNet<double> pi(4, {7, 5}, 3);
  ValueNet<double> v(4, {7}, 4);
  pi.net.init(rng);
  v.net.init(rng);
  SymmetryInputs<double> in;
  in.obs = random_matrix(4, 11, rng);
  in.critic_obs = random_matrix(4, 11, rng);
  in.obs_mirror = G.apply(in.obs);
  in.critic_obs_mirror = G.apply(in.critic_obs);
  long double value = 0.0L, policy = 0.0L;
  for (int i = 0; i < 11; ++i) {
    const VecX o = in.obs.col(i), s = in.critic_obs.col(i);
    VecX go(4), gs(4);
    for (int r = 0; r < 4; ++r) {
      go[G.index[r]] = G.sign[r] * o[r];
      gs[G.index[r]] = G.sign[r] * s[r];
    }
    const double dv = v.values(gs).sum() - v.values(s).sum();
    value += static_cast<long double>(dv) * dv;
    const VecX a = pi.mean(o), ga = pi.mean(go);
    VecX mirrored(3);
    for (int r = 0; r < 3; ++r) mirrored[A.index[r]] = A.sign[r] * a[r];
    policy += static_cast<long double>((ga - mirrored).squaredNorm());
  }
  const double oracle = static_cast<double>((value + policy) / 11.0L);
  EXPECT_NEAR(symmetry_loss<double>(pi, v, in, A), oracle, 1e-10);
}

TEST(GradCheck, LinearQuadraticIsExact) {
  Rng rng(11);
  ValueNet<double> v(3, {}, 2);
  v.net.init(rng);
  const MatX obs = random_matrix(3, 8, rng), targets = random_matrix(2, 8, rng);
  VectorS<double> g = VectorS<double>::Zero(v.net.num_params());
  value_loss<double>(v, obs, targets, &g);
  EXPECT_LT(grad_check(v.net.params(), [&] { return value_loss<double>(v, obs, targets); }, g), 1e-8);
}

TEST(GradCheck, TenParameterToyNet) {
  Rng rng(12);
  ValueNet<double> v(1, {3}, 1);
  ASSERT_EQ(v.net.num_params(), 10);
  randomize(v.net, rng, 1.0);
  const MatX obs = random_matrix(1, 6, rng), targets = random_matrix(1, 6, rng);
  VectorS<double> g = VectorS<double>::Zero(10);
  value_loss<double>(v, obs, targets, &g);
  EXPECT_LT(grad_check(v.net.params(), [&] { return value_loss<double>(v, obs, targets); }, g), 1e-4);
}

TEST(GradCheck, ValueAllHeads) {
  Rng rng(13);
  ValueNet<double> v(5, {8, 6}, kNumRewardTerms);
  v.net.init(rng);
  const MatX obs = random_matrix(5, 10, rng), targets = random_matrix(kNumRewardTerms, 10, rng);
  VectorS<double> g = VectorS<double>::Zero(v.net.num_params());
  value_loss<double>(v, obs, targets, &g);
  EXPECT_LT(grad_check(v.net.params(), [&] { return value_loss<double>(v, obs, targets); }, g), 1e-4);
}

TEST(GradCheck, SymmetryPaths) {
  Rng rng(14);
  const SignedPermutation G = small_obs_map(), A = small_action_map();
  PolicyNet<double> pi(4, {6, 5}, 3);
  ValueNet<double> v(4, {6}, 3);
  pi.net.init(rng);
  v.net.init(rng);
  SymmetryInputs<double> in;
  in.obs = random_matrix(4, 9, rng);
  in.critic_obs = random_matrix(4, 9, rng);
  in.obs_mirror = G.apply(in.obs);
  in.critic_obs_mirror = G.apply(in.critic_obs);
  Gradients<double> g;
  g.zero(pi, v);
  symmetry_loss<double>(pi, v, in, A, &g);
  const auto loss = [&] { return symmetry_loss<double>(pi, v, in, A); };
  EXPECT_LT(grad_check(pi.net.params(), loss, g.actor), 1e-4);
  EXPECT_LT(grad_check(v.net.params(), loss, g.critic), 1e-4);
}

namespace {

// Minibatch whose probability ratios stay away from the clip boundaries.
Minibatch<double> policy_batch(const PolicyNet<double>& pi, int B, Rng& rng, int critic_dim, int heads) {
  Minibatch<double> mb;
  mb.inputs.obs = random_matrix(pi.net.in_dim(), B, rng);
  mb.inputs.critic_obs = random_matrix(critic_dim, B, rng);
  const MatX mean = pi.mean(mb.inputs.obs);
  mb.actions = mean + 0.3 * random_matrix(pi.n_act(), B, rng);
  mb.old_log_prob = pi.log_prob(mean, mb.actions);
  for (int i = 0; i < B; ++i) {
    const double shift = i % 3 == 0 ? rng.uniform(0.4, 0.6) * (i % 2 ? 1 : -1) : rng.uniform(-0.08, 0.08);
    mb.old_log_prob(i) += shift;
  }
  mb.advantages = random_matrix(B, 1, rng);
  mb.returns = random_matrix(heads, B, rng);
  return mb;
}

}  // namespace

TEST(GradCheck, PolicySurrogateAndEntropy) {
  Rng rng(15);
  PolicyNet<double> pi(4, {6, 5}, 3, 0.7);
  ValueNet<double> v(5, {4}, 2);
  pi.net.init(rng);
  v.net.init(rng);
  const Minibatch<double> mb = policy_batch(pi, 12, rng, 5, 2);
  const LossWeights w{1.0, 0.0, 0.0, 0.01};
  Gradients<double> g;
  g.zero(pi, v);
  const auto out = ppo_loss<double>(pi, v, mb, nullptr, 0.2, w, &g);
  EXPECT_GT(out.clip_fraction, 0.0);
  const auto loss = [&] { return ppo_loss<double>(pi, v, mb, nullptr, 0.2, w, nullptr).total; };
  EXPECT_LT(grad_check(pi.net.params(), loss, g.actor), 1e-4);
  EXPECT_LT(grad_check(pi.log_std, loss, g.log_std), 1e-4);
}

TEST(GradCheck, FullPpoLoss) {
  Rng rng(16);
  const SignedPermutation G = small_obs_map(), A = small_action_map();
  PolicyNet<double> pi(4, {6}, 3, 0.5);
  ValueNet<double> v(4, {6}, 3);
  pi.net.init(rng);
  v.net.init(rng);
  Minibatch<double> mb = policy_batch(pi, 10, rng, 4, 3);
  mb.inputs.obs_mirror = G.apply(mb.inputs.obs);
  mb.inputs.critic_obs_mirror = G.apply(mb.inputs.critic_obs);
  const LossWeights w{1.0, 0.7, 1.3, 0.01};
  Gradients<double> g;
  g.zero(pi, v);
  ppo_loss<double>(pi, v, mb, &A, 0.2, w, &g);
  const auto loss = [&] { return ppo_loss<double>(pi, v, mb, &A, 0.2, w, nullptr).total; };
  EXPECT_LT(grad_check(pi.net.params(), loss, g.actor), 1e-4);
  EXPECT_LT(grad_check(pi.log_std, loss, g.log_std), 1e-4);
  EXPECT_LT(grad_check(v.net.params(), loss, g.critic), 1e-4);
}

TEST(GradCheck, CorruptedGradientIsFlagged) {
  Rng rng(17);
  ValueNet<double> v(3, {5}, 2);
  v.net.init(rng);
  const MatX obs = random_matrix(3, 8, rng), targets = random_matrix(2, 8, rng);
  VectorS<double> g = VectorS<double>::Zero(v.net.num_params());
  value_loss<double>(v, obs, targets, &g);
  g(3) += 0.1 * std::max(1.0, std::abs(g(3)));
  EXPECT_GT(grad_check(v.net.params(), [&] { return value_loss<double>(v, obs, targets); }, g), 1e-2);
}

TEST(Policy, LogProbMatchesDensity) {
  Rng rng(18);
  PolicyNet<double> pi(2, {3}, 2, 0.4);
  pi.log_std << std::log(0.4), std::log(1.3);
  const MatX mean = random_matrix(2, 5, rng), actions = random_matrix(2, 5, rng);
  const VecX lp = pi.log_prob(mean, actions);
  for (int i = 0; i < 5; ++i) {
    double p = 1.0;
    for (int j = 0; j < 2; ++j) {
      const double s = std::exp(pi.log_std[j]);
      const double z = (actions(j, i) - mean(j, i)) / s;
      p *= std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * M_PI));
    }
    EXPECT_NEAR(lp[i], std::log(p), 1e-12);
  }
  EXPECT_NEAR(pi.entropy(), 0.5 * std::log(2 * M_PI * M_E * 0.16) + 0.5 * std::log(2 * M_PI * M_E * 1.69), 1e-12);
}

TEST(Normalizer, BatchMergeMatchesPooledStatistics) {
  Rng rng(19);
  const MatX a = random_matrix(3, 40, rng, 2.0), b = random_matrix(3, 25, rng, 5.0);
  RunningNormalizer n(3);
  n.update(a);
  n.update(b);
  MatX all(3, 65);
  all << a, b;
  const VecX mean = all.rowwise().mean();
  const VecX var = (all.colwise() - mean).array().square().rowwise().mean();
  EXPECT_LT((n.mean() - mean).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((n.var() - var).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(n.count(), 65.0);
  EXPECT_LE(n.normalize<double>(MatX::Constant(3, 1, 1e6)).maxCoeff(), n.clip());
}

namespace {

struct UpdateFixture {
  static constexpr int T = 6, N = 4, obs_dim = 4, n_act = 3;
  RolloutBuffer buf;
  RunningNormalizer actor_norm{obs_dim}, critic_norm{obs_dim};
  MirrorMaps maps{small_obs_map(), small_obs_map(), small_action_map()};
  Learner<double> learner;

  explicit UpdateFixture(int heads, std::uint64_t seed = 20) {
    Rng rng(seed);
    buf = RolloutBuffer(T, N, heads, obs_dim, obs_dim, n_act);
    learner.policy = PolicyNet<double>(obs_dim, {8}, n_act, 0.5);
    learner.value = ValueNet<double>(obs_dim, {8}, heads);
    learner.policy.net.init(rng, 0.5);
    learner.value.net.init(rng);
    learner.lr = 1e-3;
    buf.actor_obs = random_matrix(obs_dim, T * N, rng);
    buf.critic_obs = random_matrix(obs_dim, T * N, rng);
    const MatX mean = learner.policy.mean(actor_norm.normalize<double>(buf.actor_obs));
    buf.actions = mean + 0.5 * random_matrix(n_act, T * N, rng);
    buf.log_probs = learner.policy.log_prob(mean, buf.actions);
    buf.values = learner.value.values(critic_norm.normalize<double>(buf.critic_obs));
    buf.last_values = random_matrix(heads, N, rng);
    buf.rewards = random_matrix(heads, T * N, rng);
    for (auto& d : buf.dones) d = rng.uniform() < 0.1;
    value_targets(buf, 0.99, 0.95);
  }
};

PpoConfig small_ppo() {
  PpoConfig c;
  c.epochs = 3;
  c.minibatches = 2;
  return c;
}

}  // namespace

TEST(PpoUpdate, SameSeedIsBitIdentical) {
  UpdateFixture a(3), b(3);
  Rng ra(5), rb(5);
  for (int k = 0; k < 3; ++k) {
    const UpdateStats sa = ppo_update<double>(a.learner, a.buf, a.actor_norm, a.critic_norm, &a.maps, small_ppo(), ra);
    const UpdateStats sb = ppo_update<double>(b.learner, b.buf, b.actor_norm, b.critic_norm, &b.maps, small_ppo(), rb);
    EXPECT_EQ(sa.kl, sb.kl);
    ASSERT_EQ(a.learner.policy.net.params(), b.learner.policy.net.params());
    ASSERT_EQ(a.learner.value.net.params(), b.learner.value.net.params());
    ASSERT_EQ(a.learner.policy.log_std, b.learner.policy.log_std);
  }
}

TEST(PpoUpdate, ZeroAdvantagesLeaveTheMeanPolicyUntouched) {
  UpdateFixture f(2);
  f.buf.advantages.setZero();
  PpoConfig c = small_ppo();
  c.symmetry_weight = 0.0;
  c.entropy_coef = 0.01;
  const VectorS<double> actor = f.learner.policy.net.params();
  const VectorS<double> log_std = f.learner.policy.log_std;
  const VectorS<double> critic = f.learner.value.net.params();
  Rng rng(1);
  ppo_update<double>(f.learner, f.buf, f.actor_norm, f.critic_norm, &f.maps, c, rng);
  EXPECT_EQ(f.learner.policy.net.params(), actor);
  EXPECT_GT((f.learner.policy.log_std - log_std).minCoeff(), 0.0);  // entropy bonus widens
  EXPECT_GT((f.learner.value.net.params() - critic).cwiseAbs().maxCoeff(), 0.0);
  // With symmetry on, the actor moves through the symmetry term alone.
  c.symmetry_weight = 1.0;
  ppo_update<double>(f.learner, f.buf, f.actor_norm, f.critic_norm, &f.maps, c, rng);
  EXPECT_GT((f.learner.policy.net.params() - actor).cwiseAbs().maxCoeff(), 0.0);
}

TEST(PpoUpdate, NonFiniteLossRestoresParameters) {
  UpdateFixture f(2);
  f.buf.returns(1, 5) = std::numeric_limits<double>::quiet_NaN();
  const Learner<double> before = f.learner;
  Rng rng(2);
  EXPECT_THROW(ppo_update<double>(f.learner, f.buf, f.actor_norm, f.critic_norm, &f.maps, small_ppo(), rng),
               NonFiniteLoss);
  EXPECT_EQ(f.learner.policy.net.params(), before.policy.net.params());
  EXPECT_EQ(f.learner.value.net.params(), before.value.net.params());
  EXPECT_EQ(f.learner.adam_actor.t, before.adam_actor.t);
}

TEST(PpoUpdate, LearningRateAdaptsToKl) {
  const PpoConfig c;
  EXPECT_EQ(next_learning_rate(1e-3, 0.05, c), 1e-3 / 1.5);
  EXPECT_EQ(next_learning_rate(1e-3, 0.001, c), 1e-3 * 1.5);
  EXPECT_EQ(next_learning_rate(1e-3, 0.01, c), 1e-3);
  EXPECT_EQ(next_learning_rate(1e-5, 1.0, c), 1e-5);
}

TEST(PpoUpdate, SingleHeadReproducesScalarPpoBitForBit) {
  UpdateFixture f(1);
  PpoConfig c = small_ppo();
  c.symmetry_weight = 0.0;
  Learner<double> ref = f.learner;
  const test::ScalarGae gae = test::scalar_gae(f.buf.rewards.row(0).transpose(), f.buf.values.row(0).transpose(),
                                   f.buf.last_values.row(0).transpose(), f.buf.dones, f.T, f.N, 0.99, 0.95);
  ASSERT_EQ(gae.advantages, f.buf.advantages);
  ASSERT_EQ(gae.returns, VecX(f.buf.returns.row(0).transpose()));
  Rng r1(9), r2(9);
  for (int k = 0; k < 3; ++k) {
    ppo_update<double>(f.learner, f.buf, f.actor_norm, f.critic_norm, nullptr, c, r1);
    test::scalar_ppo(ref, f.actor_norm.normalize<double>(f.buf.actor_obs), f.critic_norm.normalize<double>(f.buf.critic_obs),
               f.buf.actions, f.buf.log_probs, gae.advantages, gae.returns, c, r2);
    ASSERT_EQ(f.learner.policy.net.params(), ref.policy.net.params());
    ASSERT_EQ(f.learner.policy.log_std, ref.policy.log_std);
    ASSERT_EQ(f.learner.value.net.params(), ref.value.net.params());
    ASSERT_EQ(f.learner.lr, ref.lr);
  }
}

TEST(Checkpoint, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "zmlloco_ckpt_test.bin";
  Checkpoint c;
  c.model_hash = 0x1234'5678'9abc'def0ull;
  c.header = Json{{"iteration", 7}, {"note", "x"}};
  MatX m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  c.put("m", m);
  c.put("v", VecX(VecX::LinSpaced(4, -1, 1)));
  save_checkpoint(c, path);
  const Checkpoint r = load_checkpoint(path);
  EXPECT_EQ(r.model_hash, c.model_hash);
  EXPECT_EQ(r.header, c.header);
  EXPECT_EQ(r.matrix("m"), m);
  EXPECT_EQ(r.vector("v"), VecX::LinSpaced(4, -1, 1));
  EXPECT_FALSE(r.has("w"));
  EXPECT_THROW(r.at("w"), CheckpointError);

  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.put('X');
  }
  EXPECT_THROW(load_checkpoint(path), CheckpointError);
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path), CheckpointError);
  EXPECT_THROW(save_checkpoint(c, "/nonexistent_dir/ckpt.bin"), CheckpointError);
}

namespace {

TrainConfig tiny_train() {
  TrainConfig t;
  t.num_envs = 4;
  t.horizon = 8;
  t.workers = 2;
  t.network.actor_hidden = {16};
  t.network.critic_hidden = {16};
  t.ppo.epochs = 2;
  t.ppo.minibatches = 2;
  return t;
}

EnvConfig tiny_env() {
  EnvConfig e;
  e.terrain.mode = "plane";
  return e;
}

std::shared_ptr<const RobotModel> biped() {
  static const auto m = std::make_shared<const RobotModel>(make_default_biped());
  return m;
}

std::string metrics_without_time(const IterationMetrics& m) {
  IterationMetrics c = m;
  c.elapsed_s = 0.0;
  std::ostringstream os;
  write_metrics_row(os, c);
  return os.str();
}

}  // namespace

TEST(Trainer, SameSeedSameMetrics) {
  Trainer a(biped(), tiny_env(), tiny_train(), 3), b(biped(), tiny_env(), tiny_train(), 3);
  for (int k = 0; k < 3; ++k) ASSERT_EQ(metrics_without_time(a.iterate()), metrics_without_time(b.iterate()));
  EXPECT_EQ(a.learner().policy.net.params(), b.learner().policy.net.params());
}

TEST(Trainer, SingleHeadWhenNotVectorized) {
  TrainConfig t = tiny_train();
  t.vectorized = false;
  Trainer tr(biped(), tiny_env(), t, 4);
  EXPECT_EQ(tr.heads(), 1);
  tr.iterate();
  EXPECT_EQ(tr.buffer().rewards.rows(), 1);
  Trainer vec(biped(), tiny_env(), tiny_train(), 4);
  EXPECT_EQ(vec.heads(), kNumRewardTerms);
}

TEST(Trainer, CheckpointResume) {
  Trainer a(biped(), tiny_env(), tiny_train(), 5);
  a.iterate();
  a.iterate();
  const auto path = std::filesystem::temp_directory_path() / "zmlloco_resume_test.bin";
  save_checkpoint(a.checkpoint(Json{{"seed", 5}}), path);
  Trainer b(biped(), tiny_env(), tiny_train(), 99);
  b.restore(load_checkpoint(path));
  std::filesystem::remove(path);
  EXPECT_EQ(b.iteration(), 2);
  EXPECT_EQ(b.learner().policy.net.params(), a.learner().policy.net.params());
  EXPECT_EQ(b.learner().value.net.params(), a.learner().value.net.params());
  EXPECT_EQ(b.learner().adam_critic.t, a.learner().adam_critic.t);
  EXPECT_EQ(b.actor_normalizer().mean(), a.actor_normalizer().mean());
  EXPECT_EQ(b.envs().levels(), a.envs().levels());
  const IterationMetrics m = b.iterate();
  EXPECT_EQ(m.iteration, 3);
  EXPECT_TRUE(m.step_mean.allFinite());

  const LoadedPolicy p = load_policy(a.checkpoint(Json::object()));
  const VecX obs = a.envs().env(0).actor_obs();
  const VecX expect =
      a.learner().policy.mean(a.actor_normalizer().normalize<float>(obs)).cast<double>().col(0);
  EXPECT_EQ(p.act(obs), expect);

  Checkpoint wrong = a.checkpoint(Json::object());
  wrong.model_hash ^= 1;
  EXPECT_THROW(b.restore(wrong), CheckpointError);
}

TEST(Trainer, MetricsRowMatchesHeader) {
  Trainer t(biped(), tiny_env(), tiny_train(), 6);
  std::ostringstream os;
  write_metrics_header(os);
  write_metrics_row(os, t.iterate());
  std::istringstream is(os.str());
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
  EXPECT_EQ(static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1, metrics_columns().size());
}

TEST(Config, TrainJsonRoundTripAndValidation) {
  TrainConfig t = tiny_train();
  t.ppo.gamma = 0.97;
  t.vectorized = false;
  const Json j = to_json(t);
  EXPECT_EQ(to_json(train_config_from_json(j)), j);
  Json bad = j;
  bad["ppo"]["gamma"] = 1.5;
  EXPECT_THROW(train_config_from_json(bad), ConfigError);
  bad = j;
  bad["ppo"]["typo"] = 1;
  EXPECT_THROW(train_config_from_json(bad), ConfigError);
}
