#include "fockdist/distiller.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <map>
#include <numbers>

using namespace fockdist;

namespace {

FockVector coherent(double alpha, std::optional<FockWindow> window = {}) {
    SourceSpec s;
    s.alpha = alpha;
    s.window = window;
    return coherent_state(s);
}

FockVector squeezed(double alpha, double r, std::optional<FockWindow> window = {}) {
    SourceSpec s;
    s.alpha = alpha;
    s.squeeze_r = r;
    s.window = window;
    return squeezed_coherent_state(s);
}

std::vector<int> range(int lo, int hi, int stride = 1) {
    std::vector<int> out;
    for (int n = lo; n <= hi; n += stride) out.push_back(n);
    return out;
}

std::vector<int> congruent(const FockWindow& w, int target, int modulus) {
    std::vector<int> out;
    for (int n = w.lo; n <= w.hi; ++n)
        if ((n - target) % modulus == 0) out.push_back(n);
    return out;
}

struct Expected {
    PiFraction phi, theta;
    Outcome keep;
};

void check_plan(const DistillationPlan& p, const std::vector<Expected>& rows) {
    REQUIRE(p.steps.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CAPTURE(i);
        CHECK(p.steps[i].iteration_index == int(i));
        CHECK(p.steps[i].phi.pi_fraction() == rows[i].phi);
        CHECK(p.steps[i].theta.pi_fraction() == rows[i].theta);
        CHECK(p.steps[i].keep == rows[i].keep);
    }
}

void check_raises(ErrorKind kind, auto&& fn) {
    try {
        fn();
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == kind);
    }
}

constexpr Outcome G = Outcome::G, S = Outcome::S;

}  // namespace

TEST_CASE("iteration count examples") {
    CHECK(iteration_count(10) == 5);
    CHECK(iteration_count(std::sqrt(24.58)) == 4);
    CHECK(iteration_count(1.0 / 6) == 0);
    CHECK(iteration_count(0.01) == 0);
    SourceSpec s51;
    s51.alpha = std::sqrt(51.0);
    CHECK(iteration_count(std::sqrt(source_variance(s51))) == 5);
    s51.squeeze_r = 0.65;
    CHECK(iteration_count(std::sqrt(source_variance(s51))) == 4);
    check_raises(ErrorKind::ContractViolation, [] { (void)iteration_count(0); });
}

TEST_CASE("window-based iteration count") {
    CHECK(iteration_count_for_window(100, {70, 130}) == 5);
    CHECK(iteration_count_for_window(100, {86, 115}) == 4);
    CHECK(iteration_count_for_window(51, {40, 63}) == 4);
    CHECK(iteration_count_for_window(7, {7, 7}) == 0);
    check_raises(ErrorKind::InvalidPlan, [] { (void)iteration_count_for_window(10, {20, 30}); });
    CHECK(resolvable_window(100, 5) == FockWindow{69, 131});
    CHECK(resolvable_window(3, 4) == FockWindow{0, 18});
}

TEST_CASE("plan for 100 in five steps") {
    check_plan(plan(100, 5), {{{1, 1}, {0, 1}, G},
                              {{1, 2}, {0, 1}, G},
                              {{1, 4}, {0, 1}, S},
                              {{1, 8}, {1, 2}, G},
                              {{1, 16}, {1, 4}, G}});
}

TEST_CASE("plan for 51 in four steps") {
    check_plan(plan(51, 4), {{{1, 1}, {0, 1}, S}, {{1, 2}, {1, 2}, S}, {{1, 4}, {3, 4}, G}, {{1, 8}, {3, 8}, G}});
}

TEST_CASE("plan for 0") {
    check_plan(plan(0, 3), {{{1, 1}, {0, 1}, G}, {{1, 2}, {0, 1}, G}, {{1, 4}, {0, 1}, G}});
    CHECK(plan(0, 0).steps.empty());
}

TEST_CASE("plan argument checks") {
    check_raises(ErrorKind::InvalidPlan, [] { (void)plan(-1, 2); });
    check_raises(ErrorKind::InvalidPlan, [] { (void)plan(5, -1); });
    check_raises(ErrorKind::InvalidPlan, [] { (void)plan(5, 2, FockWindow{10, 20}); });
    check_raises(ErrorKind::InvalidPlan, [] { (void)execute(plan(5, 2), coherent(10)); });
}

TEST_CASE("theta stays in [0, 2pi)") {
    for (int a = 0; a < 300; a += 7)
        for (const auto& st : plan(a, 9).steps) {
            CHECK(st.theta.value() >= 0);
            CHECK(st.theta.value() < 2 * std::numbers::pi);
            CHECK(st.phi.value() == doctest::Approx(std::numbers::pi / std::pow(2.0, st.iteration_index)));
        }
}

TEST_CASE("|100> walkthrough from alpha 10") {
    const FockVector light = coherent(10);
    const TrajectoryRecord rec = execute(plan(100, 5), light);
    CHECK(rec.initial_survivors == range(70, 130));
    REQUIRE(rec.steps.size() == 5);
    CHECK(rec.steps[0].survivors == range(70, 130, 2));
    CHECK(rec.steps[1].survivors == range(72, 128, 4));
    CHECK(rec.steps[2].survivors == range(76, 124, 8));
    CHECK(rec.steps[3].survivors == std::vector<int>{84, 100, 116});
    CHECK(rec.steps[4].survivors == std::vector<int>{100});
    CHECK(rec.outcome_string() == "ggsgg");
    for (int i = 0; i < 4; ++i) CHECK(std::abs(rec.steps[i].probability - 0.5) <= 0.02);
    CHECK(std::abs(rec.steps[4].probability - 0.64) <= 0.01);

    const double p84 = oracle::poisson(100, 84), p100 = oracle::poisson(100, 100), p116 = oracle::poisson(100, 116);
    CHECK(rec.steps[4].probability == doctest::Approx(p100 / (p84 + p100 + p116)).epsilon(1e-10));

    double product = 1;
    for (const auto& s : rec.steps) product *= s.probability;
    CHECK(rec.cumulative_probability == doctest::Approx(product).epsilon(1e-14));
    CHECK(rec.cumulative_probability == doctest::Approx(0.04).epsilon(0.02));
    CHECK(rec.final_state.window() == FockWindow{70, 130});
    CHECK(std::abs(std::abs(rec.final_state.amplitude(100)) - 1) < 1e-12);
}

TEST_CASE("step probabilities equal Poisson class sums") {
    const TrajectoryRecord rec = execute(plan(100, 5), coherent(10));
    std::vector<int> prev = rec.initial_survivors;
    for (const auto& st : rec.steps) {
        double kept = 0, all = 0;
        for (int n : prev) all += oracle::poisson(100, n);
        for (int n : st.survivors) kept += oracle::poisson(100, n);
        CHECK(st.probability == doctest::Approx(kept / all).epsilon(1e-10));
        prev = st.survivors;
    }
}

TEST_CASE("squeezed source reaches 100 in four steps") {
    const FockVector light = squeezed(10, 0.75, FockWindow{85, 115});
    const TrajectoryRecord rec = execute(plan(100, 4), light);
    CHECK(rec.steps[0].survivors == range(86, 114, 2));
    CHECK(rec.steps[1].survivors == range(88, 112, 4));
    CHECK(rec.steps[2].survivors == std::vector<int>{92, 100, 108});
    CHECK(rec.steps[3].survivors == std::vector<int>{100});

    const FockVector def = squeezed(10, 0.75);
    CHECK(def.window() == FockWindow{86, 115});
    const PhotonStats st = photon_stats(def);
    const int q = iteration_count(std::sqrt(source_variance(SourceSpec{10, 0.75, 0, 3, {}})));
    CHECK(q == 4);
    CHECK(execute(plan(100, q), def).steps.back().survivors == std::vector<int>{100});
    CHECK(st.mean == doctest::Approx(100.6).epsilon(0.01));
}

TEST_CASE("squeezed source reaches 51 in four steps") {
    const FockVector light = squeezed(std::sqrt(51.0), 0.65);
    const TrajectoryRecord rec = execute(plan(51, 4), light);
    CHECK(rec.outcome_string() == "ssgg");
    CHECK(rec.steps.back().survivors == std::vector<int>{51});
}

TEST_CASE("number state passes with certainty") {
    const TrajectoryRecord rec = execute(plan(100, 6), FockVector::number_state(100));
    for (const auto& st : rec.steps) CHECK(st.probability == doctest::Approx(1).epsilon(1e-12));
    CHECK(rec.final_state.window() == FockWindow{100, 100});
}

TEST_CASE("congruence law") {
    const FockWindow w{37, 170};
    const FockVector light = uniform_superposition<double>(w);
    for (int a : {37, 64, 99, 100, 131, 170}) {
        const TrajectoryRecord rec = execute(plan(a, 7, w), light);
        for (std::size_t m = 0; m < rec.steps.size(); ++m) {
            CAPTURE(a);
            CAPTURE(m);
            CHECK(rec.steps[m].survivors == congruent(w, a, 1 << (m + 1)));
            CHECK(rec.steps[m].probability > 0);
        }
    }
}

TEST_CASE("planner against a brute-force register") {
    const FockWindow w{0, 63};
    const Eigen::VectorXcd uniform = Eigen::VectorXcd::Constant(64, 1.0 / 8.0);
    for (int a = 0; a <= 63; ++a) {
        CAPTURE(a);
        const DistillationPlan p = plan(a, 6, w);
        int singleton_hits = 0;
        std::string planned;
        for (const auto& st : p.steps) planned += to_string(st.keep);
        std::string hit;
        for (int seq = 0; seq < 64; ++seq) {
            Eigen::VectorXcd light = uniform;
            double prob = 1;
            std::string outcomes;
            for (int m = 0; m < 6 && prob > 0; ++m) {
                oracle::DenseRegister reg(light);
                reg.cpf(std::numbers::pi / double(1 << m));
                reg.rotate(p.steps[m].theta.value());
                const int bit = (seq >> m) & 1;
                auto [post, pm] = reg.measure(bit);
                outcomes += bit ? 's' : 'g';
                prob *= pm;
                light = post;
            }
            if (prob < 1e-14) continue;
            const auto sup = oracle::support(light, 1e-14);
            if (sup.size() == 1 && sup[0] == a) {
                ++singleton_hits;
                hit = outcomes;
            }
        }
        CHECK(singleton_hits == 1);
        CHECK(hit == planned);

        const TrajectoryRecord rec = execute(p, uniform_superposition<double>(w));
        CHECK(rec.steps.back().survivors == std::vector<int>{a});
        CHECK(rec.cumulative_probability == doctest::Approx(1.0 / 64).epsilon(1e-12));
    }
}

TEST_CASE("adaptive tree resolves each number once") {
    const FockWindow w{0, 63};
    const auto leaves = explore_tree(uniform_superposition<double>(w), 6);
    REQUIRE(leaves.size() == 64);
    std::map<int, std::string> seen;
    for (const auto& leaf : leaves) {
        REQUIRE(leaf.steps.back().survivors.size() == 1);
        seen[leaf.steps.back().survivors[0]] = leaf.outcome_string();
    }
    CHECK(seen.size() == 64);
    for (int a = 0; a <= 63; ++a) {
        std::string planned;
        for (const auto& st : plan(a, 6, w).steps) planned += to_string(st.keep);
        CHECK(seen[a] == planned);
    }
}

TEST_CASE("iteration count suffices for coherent sources") {
    for (double alpha : {4.0, 6.0, 8.0, 10.0, 12.0}) {
        CAPTURE(alpha);
        const FockVector light = coherent(alpha);
        const int target = static_cast<int>(std::lround(alpha * alpha));
        const TrajectoryRecord rec = execute(plan(target, iteration_count(alpha)), light);
        CHECK(rec.steps.back().survivors == std::vector<int>{target});
        CHECK(std::abs(std::abs(rec.final_state.amplitude(target)) - 1) < 1e-12);
    }
}

TEST_CASE("explore tree basics") {
    const auto root = explore_tree(coherent(2), 0);
    REQUIRE(root.size() == 1);
    CHECK(root[0].steps.empty());
    CHECK(root[0].cumulative_probability == 1);

    const auto cats = explore_tree(coherent(2), 1);
    REQUIRE(cats.size() == 2);
    CHECK(cats[0].outcome_string() == "g");
    CHECK(cats[1].outcome_string() == "s");
    CHECK(cats[0].cumulative_probability + cats[1].cumulative_probability == doctest::Approx(1).epsilon(1e-12));
    for (int n : cats[0].steps[0].survivors) CHECK(n % 2 == 0);
    for (int n : cats[1].steps[0].survivors) CHECK(n % 2 == 1);

    check_raises(ErrorKind::ResourceLimit, [] { (void)explore_tree(coherent(2), 13); });
    check_raises(ErrorKind::InvalidSpec, [] { (void)explore_tree(coherent(2), -1); });
}

TEST_CASE("explore tree levels sum to one") {
    const FockVector light = coherent(10);
    for (int depth = 1; depth <= 7; ++depth) {
        double total = 0;
        for (const auto& leaf : explore_tree(light, depth)) total += leaf.cumulative_probability;
        CHECK(total == doctest::Approx(1).epsilon(1e-10));
    }
}

TEST_CASE("explore tree contains the |100> walkthrough branch") {
    const auto leaves = explore_tree(coherent(10), 5);
    const auto it = std::find_if(leaves.begin(), leaves.end(),
                                 [](const TrajectoryRecord& r) { return r.outcome_string() == "ggsgg"; });
    REQUIRE(it != leaves.end());
    const TrajectoryRecord direct = execute(plan(100, 5), coherent(10));
    CHECK(it->cumulative_probability == doctest::Approx(direct.cumulative_probability).epsilon(1e-12));
    CHECK(it->cumulative_probability == doctest::Approx(0.5 * 0.5 * 0.5 * 0.5 * 0.64).epsilon(0.03));
    CHECK(it->steps.back().survivors == std::vector<int>{100});
}

TEST_CASE("leaves become single number states") {
    const FockVector light = coherent(10);
    const int q = iteration_count(10);
    // At depth Q a residue class mod 2^Q can still hold two numbers of the
    // 61-wide window; one more step separates them.
    double total = 0;
    for (const auto& leaf : explore_tree(light, q)) {
        total += leaf.cumulative_probability;
        CHECK(leaf.steps.back().survivors.size() <= 2);
    }
    CHECK(total == doctest::Approx(1).epsilon(1e-10));
    total = 0;
    for (const auto& leaf : explore_tree(light, q + 1)) {
        total += leaf.cumulative_probability;
        REQUIRE(leaf.steps.back().survivors.size() == 1);
        CHECK(light.window().contains(leaf.steps.back().survivors[0]));
    }
    CHECK(total == doctest::Approx(1).epsilon(1e-10));
}

TEST_CASE("explore tree is thread-count independent") {
    const FockVector light = coherent(6);
    const auto a = explore_tree(light, 6, 1);
    const auto b = explore_tree(light, 6, 4);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].outcome_string() == b[i].outcome_string());
        CHECK(a[i].cumulative_probability == b[i].cumulative_probability);
        CHECK((a[i].final_state.amps() - b[i].final_state.amps()).norm() == 0);
    }
    for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i - 1].outcome_string() < a[i].outcome_string());
}

TEST_CASE("sampled runs replay and land on a number state") {
    const FockVector light = coherent(10);
    const auto leaves = explore_tree(light, 6);
    for (std::uint64_t seed : {1u, 2u, 42u, 1234u}) {
        const TrajectoryRecord a = sample_run(light, 6, seed);
        const TrajectoryRecord b = sample_run(light, 6, seed);
        CHECK(a.outcome_string() == b.outcome_string());
        CHECK(a.steps.back().survivors.size() == 1);
        const auto it = std::find_if(leaves.begin(), leaves.end(),
                                     [&](const TrajectoryRecord& r) { return r.outcome_string() == a.outcome_string(); });
        REQUIRE(it != leaves.end());
        CHECK(a.cumulative_probability == doctest::Approx(it->cumulative_probability).epsilon(1e-12));
    }
    check_raises(ErrorKind::InvalidSpec, [&] { (void)sample_run(light, -1, 0); });
}

TEST_CASE("exact reflection model") {
    const FockVector light = coherent(10);
    const TrajectoryRecord ideal = execute(plan(100, 5), light);
    const TrajectoryRecord big = execute(plan(100, 5), light, ExactReflection{1e9});
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(big.steps[i].probability == doctest::Approx(ideal.steps[i].probability).epsilon(1e-5));
        CHECK(big.steps[i].renorm_loss < 1e-5);
    }
    CHECK(support(big.final_state, 1e-12) == std::vector<int>{100});
    const TrajectoryRecord c = execute(plan(100, 5), light, ExactReflection{1024});
    for (const auto& st : c.steps) {
        CHECK(st.renorm_loss > 0);
        CHECK(st.renorm_loss < 0.2);
    }
    // Finite cooperativity leaves residual amplitude on the wrong class.
    CHECK(support(c.final_state, 1e-12).size() > 1);
    CHECK(c.final_state.probability(100) > 0.9);
    check_raises(ErrorKind::InvalidSpec, [&] { (void)execute(plan(100, 5), light, ExactReflection{-1}); });
}

TEST_CASE("prime deletion") {
    const FockVector light = coherent(10);
    const MeasurementRecord del = delete_fock(light, 101);
    CHECK(del.post_state.amplitude(101) == std::complex<double>(0));
    CHECK(del.probability > 0);
    // Each amplitude is scaled by (1 + e^{i pi n / 101}) / 2 before renormalizing.
    const double norm = std::sqrt(del.probability);
    for (int n : {70, 100, 130}) {
        CAPTURE(n);
        const std::complex<double> factor = (1.0 + std::polar(1.0, std::numbers::pi * n / 101)) / 2.0;
        CHECK(std::abs(factor) == doctest::Approx(std::abs(std::cos(std::numbers::pi * n / 202))).epsilon(1e-12));
        CHECK(std::abs(del.post_state.amplitude(n) * norm - factor * light.amplitude(n)) < 1e-12);
    }
    CHECK(std::abs(std::cos(100 * std::numbers::pi / 202)) == doctest::Approx(0.01555).epsilon(1e-3));

    const FockVector ideal = idealized_deletion(light, 101);
    CHECK(ideal.amplitude(101) == std::complex<double>(0));
    CHECK(std::abs(ideal.amplitude(100) / light.amplitude(100)) > 1);
    CHECK(std::norm(overlap(ideal, del.post_state)) < 0.5);

    check_raises(ErrorKind::ImpossibleOutcome, [] { (void)delete_fock(FockVector::number_state(101), 101); });
    check_raises(ErrorKind::ImpossibleOutcome, [] { (void)idealized_deletion(FockVector::number_state(303), 101); });
    check_raises(ErrorKind::InvalidSpec, [&] { (void)delete_fock(light, 1); });
    // Even multiples survive.
    CHECK(std::abs(delete_fock(FockVector::number_state(202), 101).post_state.amplitude(202)) == doctest::Approx(1));
}

TEST_CASE("support run encoding") {
    const std::vector<int> evens = range(70, 130, 2);
    CHECK(encode_runs(evens) == std::vector<SupportRun>{{70, 2, 31}});
    CHECK(describe_support(range(70, 130)) == "70..130");
    CHECK(describe_support(range(70, 128, 2)) == "70,72..128");
    CHECK(describe_support({84, 100, 116}) == "84,100,116");
    CHECK(describe_support({100}) == "100");
    CHECK(describe_support({}) == "{}");
    for (const auto& v : {evens, std::vector<int>{1, 2, 3, 10, 20, 30, 31}, std::vector<int>{5}, std::vector<int>{}})
        CHECK(decode_runs(encode_runs(v)) == v);
}
