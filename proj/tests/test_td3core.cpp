#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "gatepilot/errors.hpp"
#include "gatepilot/td3core.hpp"
#include "oracles/analytic.hpp"
#include "oracles/finite_diff.hpp"

using namespace gatepilot;
using namespace gatepilot::td3core;

namespace {

Transition numbered(double k) {
    Transition t;
    t.s.fill(k);
    t.a = {0.1, -0.2, 0.3, -0.4};
    t.r = k;
    t.s_next.fill(k + 0.5);
    return t;
}

Batch random_batch(std::size_t n, Rng& rng) {
    std::normal_distribution<double> obs(0.0, 2.0);
    std::uniform_real_distribution<double> act(-1.0, 1.0);
    std::vector<Transition> ts(n);
    for (auto& t : ts) {
        for (double& v : t.s) v = obs(rng);
        for (double& v : t.s_next) v = obs(rng);
        for (double& v : t.a) v = act(rng);
        t.r = obs(rng);
        t.d = act(rng) > 0.8;
    }
    return make_batch(ts);
}

double mean_q(const Batch& b, const MlpParams& actor, const MlpParams& critic) {
    const auto fa = netcore::forward(actor, b.s, b.size);
    const auto x = critic_input(b.s, fa.output(), b.size);
    const auto fq = netcore::forward(critic, x, b.size);
    double s = 0.0;
    for (double q : fq.output()) s += q;
    return s / static_cast<double>(b.size);
}

double critic_loss(const Batch& b, const std::vector<double>& y, const MlpParams& critic) {
    const auto fq = netcore::forward(critic, critic_input(b.s, b.a, b.size), b.size);
    double s = 0.0;
    for (std::size_t i = 0; i < b.size; ++i) s += (fq.output()[i] - y[i]) * (fq.output()[i] - y[i]);
    return s / static_cast<double>(b.size);
}

Td3Config small_config() {
    Td3Config cfg;
    cfg.hidden = {32, 24};
    cfg.buffer_capacity = 5000;
    return cfg;
}

}  // namespace

TEST_CASE("ou process recurrence") {
    Rng rng(0);
    OuProcess p{0.2, 0.0};
    p.x = {1, 1, 1, 1};
    const Vec4 x = ou_sample(p, rng);
    for (double v : x) CHECK(v == doctest::Approx(0.8));
    OuProcess still{0.2, 0.0};
    CHECK(ou_sample(still, rng) == Vec4{});
    p.reset();
    CHECK(p.x == Vec4{});
    CHECK_THROWS_AS((OuProcess{1.5, 0.1}.validate()), InvalidParameter);
    CHECK_THROWS_AS((OuProcess{0.2, -0.1}.validate()), InvalidParameter);
}

TEST_CASE("ou stationary spread matches the AR(1) variance") {
    Rng rng(1);
    OuProcess p{0.2, 0.15};
    for (int i = 0; i < 1000; ++i) ou_sample(p, rng);
    const int n = 1'000'000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = ou_sample(p, rng)[0];
        sum += v;
        sq += v * v;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    CHECK(oracle::ar1_stationary_std(0.2, 0.15) == doctest::Approx(0.25));
    CHECK(std::abs(sd - 0.25) < 0.05 * 0.25);
}

TEST_CASE("select_action adds noise and clips") {
    Rng rng(2);
    MlpParams actor = netcore::init_actor(rng).zeros_like();
    Observation obs{};
    obs.fill(0.3);
    OuProcess quiet{0.2, 0.0};
    CHECK(select_action(actor, obs, quiet, rng) == Vec4{});

    OuProcess big{0.2, 0.0};
    big.x = {2, 2, 2, 2};
    const Vec4 a = select_action(actor, obs, big, rng);
    for (double v : a) CHECK(v == 1.0);

    Rng init(3);
    const MlpParams real = netcore::init_actor(init);
    OuProcess loud{0.2, 3.0};
    for (int i = 0; i < 1000; ++i) {
        for (double v : select_action(real, obs, loud, rng)) {
            CHECK(v >= -1.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("replay buffer ring semantics") {
    ReplayBuffer buf(2);
    Rng rng(4);
    CHECK_THROWS_AS(buf.sample_batch(1, rng), InsufficientData);
    buf.store(numbered(1));
    buf.store(numbered(2));
    buf.store(numbered(3));
    CHECK(buf.size() == 2);
    CHECK(buf.oldest(0).r == 2.0);
    CHECK(buf.oldest(1).r == 3.0);
    CHECK_THROWS_AS(buf.oldest(2), InsufficientData);
    CHECK_THROWS_AS(buf.sample_batch(3, rng), InsufficientData);

    ReplayBuffer big(10);
    for (int i = 0; i < 25; ++i) {
        big.store(numbered(i));
        CHECK(big.size() <= big.capacity());
    }
    CHECK(big.oldest(0).r == 15.0);
}

TEST_CASE("single stored transition is the forced draw") {
    ReplayBuffer buf(5);
    buf.store(numbered(7));
    Rng rng(5);
    const Batch b = buf.sample_batch(1, rng);
    CHECK(b.size == 1);
    CHECK(b.r[0] == 7.0);
    CHECK(b.s[3] == 7.0);
    CHECK(b.s_next[0] == 7.5);
    CHECK(b.a[2] == 0.3);
}

TEST_CASE("sampling is uniform with replacement and seed-deterministic") {
    ReplayBuffer buf(10);
    for (int i = 0; i < 10; ++i) buf.store(numbered(i));
    Rng rng(6);
    std::vector<int> counts(10, 0);
    for (int k = 0; k < 10000; ++k) {
        const Batch b = buf.sample_batch(10, rng);
        for (std::size_t i = 0; i < b.size; ++i) {
            ++counts[b.indices[i]];
            CHECK(b.r[i] == buf.slot(b.indices[i]).r);
        }
    }
    for (int c : counts) CHECK(std::abs(c / 1e5 - 0.1) < 0.01);

    Rng a(9), b(9);
    CHECK(buf.sample_batch(10, a).indices == buf.sample_batch(10, b).indices);
}

TEST_CASE("target smoothing noise: zero sigma, clipping, spread") {
    Rng rng(7);
    const MlpParams actor = netcore::init_actor(rng);
    const Batch batch = random_batch(100, rng);

    const TargetActions exact = target_actions(batch, actor, 0.0, 0.5, rng);
    const auto mu = netcore::forward(actor, batch.s_next, batch.size);
    for (std::size_t i = 0; i < exact.actions.size(); ++i) CHECK(exact.actions[i] == mu.output()[i]);

    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (int k = 0; k < 2500; ++k) {
        const TargetActions t = target_actions(batch, actor, 0.2, 0.5, rng);
        for (std::size_t i = 0; i < t.actions.size(); ++i) {
            CHECK(std::abs(t.noise[i]) <= 0.5);
            CHECK(std::abs(t.actions[i]) <= 1.0);
            sum += t.noise[i];
            sq += t.noise[i] * t.noise[i];
            ++n;
        }
    }
    const double sd = std::sqrt(sq / n - (sum / n) * (sum / n));
    CHECK(std::abs(sd - oracle::clipped_normal_std(0.2, 0.5)) < 1e-3);
}

TEST_CASE("clipped double-Q targets") {
    Rng rng(8);
    MlpParams c1 = netcore::init_critic(rng);
    MlpParams c2 = netcore::init_critic(rng);
    Batch batch = random_batch(64, rng);
    const TargetActions ta = target_actions(batch, netcore::init_actor(rng), 0.2, 0.5, rng);
    const TargetValues tv = compute_targets(batch, c1, c2, ta.actions, 0.99);
    for (std::size_t b = 0; b < batch.size; ++b) {
        const double bound1 = batch.r[b] + 0.99 * (1 - batch.d[b]) * tv.q1[b];
        const double bound2 = batch.r[b] + 0.99 * (1 - batch.d[b]) * tv.q2[b];
        CHECK(tv.y[b] <= bound1);
        CHECK(tv.y[b] <= bound2);
        if (batch.d[b] == 1.0) CHECK(tv.y[b] == batch.r[b]);
    }
    const TargetValues same = compute_targets(batch, c1, c1, ta.actions, 0.99);
    for (std::size_t b = 0; b < batch.size; ++b) CHECK(same.q1[b] == same.q2[b]);
}

TEST_CASE("scalar target arithmetic: r=1, gamma=0.99, Q1=2, Q2=3 gives 2.98") {
    // two single-layer linear critics with constant outputs 2 and 3
    auto constant = [](double v) {
        MlpParams net;
        net.layers.emplace_back(1, 12, netcore::Activation::Linear);
        net.layers[0].biases[0] = v;
        return net;
    };
    Batch b = make_batch(std::vector<Transition>{numbered(0)});
    b.r[0] = 1.0;
    b.d[0] = 0.0;
    const TargetValues tv = compute_targets(b, constant(2.0), constant(3.0), std::vector<double>(4, 0.0), 0.99);
    CHECK(tv.y[0] == doctest::Approx(2.98).epsilon(1e-15));
}

TEST_CASE("critic loss gradient matches finite differences and reaches zero at the targets") {
    Rng rng(10);
    MlpParams critic = netcore::init_critic(rng, {40, 30});
    const Batch batch = random_batch(16, rng);
    std::vector<double> y(batch.size);
    for (double& v : y) v = std::normal_distribution<double>(0, 1)(rng);

    const LossGradient g = critic_loss_gradient(batch, y, critic);
    CHECK(g.value == doctest::Approx(critic_loss(batch, y, critic)).epsilon(1e-13));
    std::mt19937_64 pick(0);
    const auto refs = oracle::select_params(critic, 1u << 20, 0, pick);
    const auto res = oracle::check_gradient(critic, g.grads, refs,
                                            [&] { return critic_loss(batch, y, critic); }, 1e-6,
                                            oracle::roundoff_floor(g.value));
    CHECK(res.worst < 1e-5);

    // targets equal to the predictions: zero gradient, and an update leaves the critic as is
    const auto fq = netcore::forward(critic, critic_input(batch.s, batch.a, batch.size), batch.size);
    const std::vector<double> fixed(fq.output().begin(), fq.output().end());
    const LossGradient z = critic_loss_gradient(batch, fixed, critic);
    CHECK(z.value == 0.0);
    CHECK(z.grads == critic.zeros_like());
}

TEST_CASE("critic updates leave parameters unchanged at zero loss and descend otherwise") {
    Rng rng(11);
    Td3Config cfg = small_config();
    cfg.critic_lr = 1e-3;
    TrainerState st = init_trainer(cfg, rng);
    const Batch batch = random_batch(100, rng);

    std::vector<double> y1(batch.size);
    {
        const auto fq = netcore::forward(st.critic1, critic_input(batch.s, batch.a, batch.size), batch.size);
        y1.assign(fq.output().begin(), fq.output().end());
    }
    TrainerState frozen = st;
    frozen.critic2 = frozen.critic1;
    frozen.critic2_opt = frozen.critic1_opt;
    const MlpParams before = frozen.critic1;
    critic_update(batch, y1, frozen, cfg);
    for (std::size_t l = 0; l < before.layers.size(); ++l) {
        CHECK(frozen.critic1.layers[l].weights == before.layers[l].weights);
        CHECK(frozen.critic1.layers[l].biases == before.layers[l].biases);
    }

    std::vector<double> y(batch.size);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = batch.r[i] * 3.0;
    const double first = critic_update(batch, y, st, cfg).q1;
    double last = first;
    for (int k = 0; k < 99; ++k) last = critic_update(batch, y, st, cfg).q1;
    CHECK(last < first);
}

TEST_CASE("actor objective gradient flows through the critic action input") {
    Rng rng(12);
    MlpParams actor = netcore::init_actor(rng, {40, 30}, 0.3);
    const MlpParams critic = netcore::init_critic(rng, {40, 30});
    const Batch batch = random_batch(16, rng);

    const LossGradient g = actor_objective_gradient(batch, actor, critic);
    CHECK(g.value == doctest::Approx(mean_q(batch, actor, critic)).epsilon(1e-13));
    std::mt19937_64 pick(1);
    const auto refs = oracle::select_params(actor, 1u << 20, 0, pick);
    double scale = 0.0;
    {
        const auto fa = netcore::forward(actor, batch.s, batch.size);
        const auto fq = netcore::forward(critic, critic_input(batch.s, fa.output(), batch.size), batch.size);
        for (double q : fq.output()) scale += std::abs(q) / batch.size;
    }
    const auto res = oracle::check_gradient(actor, g.grads, refs,
                                            [&] { return mean_q(batch, actor, critic); }, 1e-6,
                                            oracle::roundoff_floor(scale));
    CHECK(res.worst < 1e-5);

    MlpParams blind = critic;
    for (std::size_t r = 0; r < blind.layers[0].rows; ++r)
        for (std::size_t c = 8; c < 12; ++c) blind.layers[0].weights[r * 12 + c] = 0.0;
    CHECK(actor_objective_gradient(batch, actor, blind).grads == actor.zeros_like());
}

TEST_CASE("actor ascent raises mean Q on a frozen batch and critic") {
    Rng rng(13);
    Td3Config cfg = small_config();
    cfg.actor_lr = 1e-3;
    TrainerState st = init_trainer(cfg, rng);
    const MlpParams critic_before = st.critic1;
    const Batch batch = random_batch(100, rng);
    double prev = mean_q(batch, st.actor, st.critic1);
    const double start = prev;
    for (int k = 0; k < 50; ++k) {
        CHECK(actor_update(batch, st, cfg) == doctest::Approx(prev).epsilon(1e-12));
        const double now = mean_q(batch, st.actor, st.critic1);
        CHECK(now >= prev);
        prev = now;
    }
    CHECK(prev > start);
    CHECK(st.critic1 == critic_before);
}

TEST_CASE("targets start equal to the main networks and blend by rho") {
    Rng rng(14);
    const Td3Config cfg = small_config();
    TrainerState st = init_trainer(cfg, rng);
    CHECK(st.target_actor == st.actor);
    CHECK(st.target_critic1 == st.critic1);
    CHECK(st.target_critic2 == st.critic2);
    CHECK_FALSE(st.critic1 == st.critic2);

    MlpParams one = st.actor, zero = st.actor.zeros_like();
    for (auto& l : one.layers) {
        std::fill(l.weights.begin(), l.weights.end(), 1.0);
        std::fill(l.biases.begin(), l.biases.end(), 1.0);
    }
    MlpParams t = one;
    netcore::polyak_update(t, zero, 0.999);
    CHECK(t.layers[1].weights[5] == 0.999);
    netcore::polyak_update(t, zero, 1.0);
    CHECK(t.layers[1].weights[5] == 0.999);
}

TEST_CASE("update cadence: critics every step after warm start, actor every second update") {
    Td3Config cfg = small_config();
    std::uint64_t critic_updates = 0, actor_updates = 0;
    std::vector<std::uint64_t> steps_with_update;
    std::uint64_t step = 0;
    TrainCallbacks cb;
    cb.on_update = [&](const UpdateInfo& info) {
        ++critic_updates;
        CHECK(info.j == critic_updates);
        CHECK(info.actor_updated == (info.j % 2 == 0));
        if (info.actor_updated) ++actor_updates;
        steps_with_update.push_back(step);
    };
    cb.on_step = [&](const TrainerState&) { ++step; };
    Trainer trainer(gateworld::EnvConfig{}, cfg, 3);
    trainer.run(109, cb);
    CHECK(critic_updates == 10);
    CHECK(actor_updates == 5);
    CHECK(trainer.state().updates == 10);
    CHECK(trainer.state().actor_updates == 5);
    CHECK(steps_with_update.front() == 99);
}

TEST_CASE("smoke run: buffer fills, episodes are reported, actions stay legal") {
    Td3Config cfg = small_config();
    std::vector<EpisodeRecord> episodes;
    bool legal = true;
    TrainCallbacks cb;
    cb.on_episode = [&](const EpisodeRecord& r) { episodes.push_back(r); };
    cb.on_transition = [&](const Transition& t) {
        for (double a : t.a) legal = legal && a >= -1.0 && a <= 1.0;
    };
    Trainer trainer(gateworld::EnvConfig{}, cfg, 4);
    trainer.run(1000, cb);
    CHECK(legal);
    CHECK(trainer.buffer().size() == 1000);
    CHECK(trainer.state().env_steps == 1000);
    CHECK(episodes.size() == trainer.state().episodes);
    std::uint64_t prev = 0;
    for (const auto& e : episodes) {
        CHECK(e.env_steps > prev);
        CHECK((gateworld::is_terminal(e.outcome) || e.outcome == gateworld::EpisodeOutcome::Timeout));
        prev = e.env_steps;
    }
}

TEST_CASE("terminal transitions carry d=1 and truncations d=0") {
    Td3Config cfg = small_config();
    gateworld::EnvConfig env;
    env.world.timeout_steps = 30;
    std::vector<Transition> stored;
    std::vector<EpisodeRecord> episodes;
    TrainCallbacks cb;
    cb.on_transition = [&](const Transition& t) { stored.push_back(t); };
    cb.on_episode = [&](const EpisodeRecord& r) { episodes.push_back(r); };
    Trainer trainer(env, cfg, 5);
    trainer.run(600, cb);
    REQUIRE_FALSE(episodes.empty());
    for (const auto& e : episodes) {
        const Transition& last = stored[e.env_steps - 1];
        CHECK(last.d == gateworld::is_terminal(e.outcome));
    }
    std::size_t terminal_count = 0;
    for (const auto& t : stored) terminal_count += t.d;
    std::size_t terminal_episodes = 0;
    for (const auto& e : episodes) terminal_episodes += gateworld::is_terminal(e.outcome);
    CHECK(terminal_count == terminal_episodes);
}

TEST_CASE("exploration noise restarts from zero at each episode") {
    // a near random walk with unit steps: after 20 steps the state is far from zero,
    // one step after a restart it is a single N(0, 1) draw
    Td3Config cfg = small_config();
    cfg.ou_theta = 1e-3;
    cfg.ou_sigma = 1.0;
    gateworld::EnvConfig env;
    env.world.timeout_steps = 20;
    env.spawn_x = {-9.0, -8.0};
    Trainer trainer(env, cfg, 6);
    trainer.run(20);
    REQUIRE(trainer.state().episodes == 1);
    const Vec4 before = trainer.exploration().x;
    double spread_before = 0.0;
    for (double v : before) spread_before += v * v;
    CHECK(spread_before > 4 * 4.0);

    trainer.run(1);
    double spread_after = 0.0;
    for (double v : trainer.exploration().x) spread_after += v * v;
    CHECK(spread_after < 4 * 4.0);
}

TEST_CASE("training is deterministic in the seed") {
    Td3Config cfg = small_config();
    auto run = [&](std::uint64_t seed) {
        std::vector<double> returns;
        TrainCallbacks cb;
        cb.on_episode = [&](const EpisodeRecord& r) { returns.push_back(r.ret); };
        Trainer t(gateworld::EnvConfig{}, cfg, seed);
        t.run(400, cb);
        return std::make_pair(returns, t.state().actor);
    };
    const auto a = run(11), b = run(11), c = run(12);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
    CHECK_FALSE(a.second == c.second);
}

TEST_CASE("config validation") {
    Td3Config bad;
    bad.polyak = 1.0;
    CHECK_THROWS_AS(bad.validate(), InvalidParameter);
    bad = {};
    bad.policy_delay = 0;
    CHECK_THROWS_AS(bad.validate(), InvalidParameter);
    bad = {};
    bad.gamma = 1.2;
    CHECK_THROWS_AS(bad.validate(), InvalidParameter);
    bad = {};
    bad.buffer_capacity = 10;
    CHECK_THROWS_AS(bad.validate(), InvalidParameter);
    CHECK_NOTHROW(Td3Config{}.validate());
}
