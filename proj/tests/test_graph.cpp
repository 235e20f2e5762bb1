#include <doctest.h>

#include <algorithm>
#include <set>

#include "volrec/graph.hpp"
#include "volrec/rng.hpp"

using namespace volrec;

namespace {

// The noisy worked-example volumes and their fixed [v-1, v+3] windows.
const std::vector<Volume> kNoisyExample = {29,  58,  79,  89,  98,  108, 128,
                                           160, 178, 209, 239, 268, 299};
const WindowPolicy kExampleWindows = WindowPolicy::additive(1, 3);

bool is_clique(const VolumeGraph& g, const std::vector<Volume>& volumes) {
    std::vector<std::size_t> idx;
    for (Volume v : volumes) {
        const auto it = std::lower_bound(g.nodes().begin(), g.nodes().end(), v);
        REQUIRE(it != g.nodes().end());
        REQUIRE(*it == v);
        idx.push_back(static_cast<std::size_t>(it - g.nodes().begin()));
    }
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = i + 1; j < idx.size(); ++j)
            if (!g.has_edge(idx[i], idx[j])) return false;
    return true;
}

// Independent maximal-clique oracle: scan all subsets.
std::vector<std::vector<Volume>> brute_force_maximal_cliques(const VolumeGraph& g,
                                                             std::size_t min_size) {
    const std::size_t n = g.size();
    REQUIRE(n <= 16);
    std::vector<std::vector<Volume>> out;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) members.push_back(i);
        if (members.size() < min_size) continue;
        bool clique = true;
        for (std::size_t i = 0; i < members.size() && clique; ++i)
            for (std::size_t j = i + 1; j < members.size() && clique; ++j)
                if (!g.has_edge(members[i], members[j])) clique = false;
        if (!clique) continue;
        bool maximal = true;
        for (std::size_t v = 0; v < n && maximal; ++v) {
            if (mask & (1u << v)) continue;
            bool extends = true;
            for (std::size_t m : members)
                if (!g.has_edge(v, m)) {
                    extends = false;
                    break;
                }
            if (extends) maximal = false;
        }
        if (!maximal) continue;
        std::vector<Volume> volumes;
        for (std::size_t m : members) volumes.push_back(g.nodes()[m]);
        out.push_back(std::move(volumes));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() > b.size();
        return a < b;
    });
    return out;
}

} // namespace

TEST_CASE("approximate equality") {
    CHECK(approx_equal(1000, 1001, 0.002));
    CHECK(approx_equal(42, 42, 0.0));
    CHECK_FALSE(approx_equal(100, 103, 0.002));
    // Symmetry.
    for (Volume u : {3, 77, 1000})
        for (Volume v : {5, 80, 998})
            CHECK(approx_equal(u, v, 0.05) == approx_equal(v, u, 0.05));
    // The threshold multiplier widens the test.
    CHECK_FALSE(approx_equal(1000, 1003, 0.002));
    CHECK(approx_equal(1000, 1003, 0.002, 2.0));
    CHECK_THROWS_AS(approx_equal(0, 5, 0.1), std::invalid_argument);
}

TEST_CASE("multiplicative window bounds carry the 10/90 asymmetry") {
    const WindowPolicy policy = WindowPolicy::multiplicative(0.002);
    const auto [lo, hi] = policy.bounds(10000);
    CHECK(lo == doctest::Approx(10000.0 * (1.0 - 0.1 * 0.002)));
    CHECK(hi == doctest::Approx(10000.0 * (1.0 + 0.9 * 0.002)));
    // Scaled-integer containment agrees with the real bounds.
    CHECK(policy.contains(9998, 10000));
    CHECK_FALSE(policy.contains(9997, 10000));
    CHECK(policy.contains(10018, 10000));
    CHECK_FALSE(policy.contains(10019, 10000));
}

TEST_CASE("noiseless graph: the elementary volumes form the known clique") {
    const std::vector<Volume> volumes = {30,  60,  80,  90,  100, 110, 130,
                                         170, 180, 210, 240, 270, 300};
    const VolumeGraph g = build_graph(volumes, 0.0);
    CHECK(is_clique(g, {30, 130, 210, 240, 300}));
}

TEST_CASE("noiseless graph: edge exists when the difference is a volume") {
    const VolumeGraph g = build_graph({5, 10, 11, 16, 21, 26}, 0.0);
    const auto& nodes = g.nodes();
    const auto index = [&](Volume v) {
        return static_cast<std::size_t>(
            std::lower_bound(nodes.begin(), nodes.end(), v) - nodes.begin());
    };
    CHECK(g.has_edge(index(21), index(5)));   // 21 - 5 = 16, present
    CHECK_FALSE(g.has_edge(index(11), index(10)));  // diff 1, absent
}

TEST_CASE("single node graph has no edges") {
    const VolumeGraph g = build_graph(std::vector<Volume>{7}, 0.0);
    CHECK(g.size() == 1);
    CHECK(g.edge_count() == 0);
    CHECK(find_maximal_cliques(g).cliques.empty());
}

TEST_CASE("edges grow monotonically with the noise budget") {
    Rng rng(4321);
    for (int round = 0; round < 10; ++round) {
        std::set<Volume> volume_set;
        while (volume_set.size() < 12) volume_set.insert(rng.uniform_int(50, 3000));
        const std::vector<Volume> volumes(volume_set.begin(), volume_set.end());
        const double budgets[] = {0.0, 0.001, 0.005, 0.02, 0.1};
        for (std::size_t b = 1; b < 5; ++b) {
            const VolumeGraph low = build_graph(volumes, budgets[b - 1]);
            const VolumeGraph high = build_graph(volumes, budgets[b]);
            for (std::size_t i = 0; i < low.size(); ++i)
                for (std::size_t j = i + 1; j < low.size(); ++j)
                    if (low.has_edge(i, j)) CHECK(high.has_edge(i, j));
        }
    }
}

TEST_CASE("noiseless completeness: elementary volumes always form a clique") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const int n_values = 3 + static_cast<int>(seed % 6);  // 3..8
        const Database db =
            generate_database({DbKind::UniformLike, 0, 0, 40 * n_values, n_values}, seed);
        const auto table = exact_volumes(db);
        const VolumeGraph g = build_graph(table.distinct_volumes(), 0.0);
        CHECK(is_clique(g, table.elementary_volumes()));
    }
}

TEST_CASE("clique to candidate: sequential subtraction") {
    CHECK(clique_to_candidate({30, 130, 210, 240, 300}) ==
          std::vector<Volume>{30, 100, 80, 30, 60});
    CHECK(clique_to_candidate({29, 209, 239, 299}) == std::vector<Volume>{29, 180, 30, 60});
    CHECK(clique_to_candidate({17}) == std::vector<Volume>{17});
}

TEST_CASE("clique_to_candidate inverts prefix sums") {
    Rng rng(11);
    for (int round = 0; round < 50; ++round) {
        std::vector<Volume> segments;
        const int len = 1 + static_cast<int>(rng.uniform_int(0, 9));
        for (int i = 0; i < len; ++i) segments.push_back(rng.uniform_int(1, 500));
        std::vector<Volume> prefix;
        Volume acc = 0;
        for (Volume s : segments) prefix.push_back(acc += s);
        CHECK(clique_to_candidate(prefix) == segments);
    }
}

TEST_CASE("worked-example noisy graph under the fixed windows") {
    const VolumeGraph g = build_graph(kNoisyExample, kExampleWindows);

    // The famous missing connection: no window contains 299 - 128 = 171.
    const auto index = [&](Volume v) {
        return static_cast<std::size_t>(
            std::lower_bound(g.nodes().begin(), g.nodes().end(), v) - g.nodes().begin());
    };
    CHECK_FALSE(g.has_edge(index(299), index(128)));
    CHECK_FALSE(approximately_present(171, g.nodes(), kExampleWindows));
    CHECK(approximately_present(180, g.nodes(), kExampleWindows));  // w(178)

    // Both narrative cliques are cliques of this graph.
    CHECK(is_clique(g, {29, 128, 209, 239}));
    CHECK(is_clique(g, {29, 209, 239, 299}));

    // {29,128,209,239} is maximal; {29,209,239,299} sits inside a larger
    // clique ({29,209,239,268,299}) and is reachable through subset
    // enumeration.
    const CliqueList maximal = find_maximal_cliques(g);
    const auto found_a = std::find(maximal.cliques.begin(), maximal.cliques.end(),
                                   std::vector<Volume>{29, 128, 209, 239});
    CHECK(found_a != maximal.cliques.end());
    CHECK(is_clique(g, {29, 209, 239, 268, 299}));

    const CliqueList all4 = enumerate_cliques(g, 4, 4);
    const auto found_b = std::find(all4.cliques.begin(), all4.cliques.end(),
                                   std::vector<Volume>{29, 209, 239, 299});
    CHECK(found_b != all4.cliques.end());
}

TEST_CASE("complete graph yields one maximal clique") {
    const VolumeGraph g = build_graph({10, 20, 30, 40, 50}, WindowPolicy::additive(0, 50));
    CHECK(g.edge_count() == 10);
    const CliqueList cliques = find_maximal_cliques(g);
    REQUIRE(cliques.cliques.size() == 1);
    CHECK(cliques.cliques[0] == std::vector<Volume>{10, 20, 30, 40, 50});

    // All sub-cliques of sizes 3..5: C(5,3)+C(5,4)+C(5,5) = 16.
    CHECK(enumerate_cliques(g, 3, 5).cliques.size() == 16);
}

TEST_CASE("no edges means no cliques of size two or more") {
    const VolumeGraph g = build_graph({10, 11, 13}, 0.0);
    CHECK(g.edge_count() == 0);
    CHECK(find_maximal_cliques(g).cliques.empty());
}

TEST_CASE("clique enumeration agrees with subset brute force") {
    Rng rng(2024);
    for (int round = 0; round < 12; ++round) {
        std::set<Volume> volume_set;
        const std::size_t count = 8 + static_cast<std::size_t>(rng.uniform_int(0, 6));
        while (volume_set.size() < count) volume_set.insert(rng.uniform_int(20, 400));
        const std::vector<Volume> volumes(volume_set.begin(), volume_set.end());
        const double budget = round % 3 == 0 ? 0.0 : 0.02 * static_cast<double>(round % 5);
        const VolumeGraph g = build_graph(volumes, budget);
        const CliqueList mine = find_maximal_cliques(g, 2, 100000);
        CHECK(mine.cliques == brute_force_maximal_cliques(g, 2));
    }
}

TEST_CASE("clique truncation reports itself") {
    const VolumeGraph g = build_graph({10, 20, 30, 40, 50, 60, 70, 80},
                                      WindowPolicy::additive(0, 80));
    const CliqueList limited = enumerate_cliques(g, 2, 8, 5);
    CHECK(limited.truncated);
    CHECK(limited.cliques.size() == 5);
}

TEST_CASE("adjacency text export lists sorted neighbors") {
    const VolumeGraph g = build_graph({5, 10, 15}, 0.0);
    const std::string text = graph_to_text(g);
    CHECK(text.find("15: 5,10") != std::string::npos);
}

TEST_CASE("observation coverage: the true column explains everything") {
    const Database db({30, 100, 80, 30, 60});
    const auto volumes = exact_volumes(db).distinct_volumes();
    const WindowPolicy zero = WindowPolicy::multiplicative(0.0);
    CHECK(observation_coverage(db.counts(), volumes, zero) == volumes.size());
    // A wrong full-length candidate explains strictly less.
    CHECK(observation_coverage({30, 30, 180, 30, 30}, volumes, zero) < volumes.size());
}
