#include <algorithm>
#include <deque>
#include <random>

#include "doctest.h"
#include "gazepet/components.hpp"
#include "gazepet/error.hpp"
#include "oracles.hpp"

using namespace gazepet;

namespace {

std::vector<std::uint8_t> random_mask(std::mt19937_64& rng, int w, int h) {
    // Mix densities so both sparse specks and big blobs show up.
    const double p = 0.15 + 0.5 * (rng() % 100) / 100.0;
    std::bernoulli_distribution b(p);
    std::vector<std::uint8_t> m(static_cast<std::size_t>(w) * h);
    for (auto& v : m) v = b(rng) ? 1 : 0;
    return m;
}

// Compare against the flood fill by pixel membership and tight box.
bool same_components(const ComponentLabeling& got, const std::vector<oracle::Blob>& ref, int w) {
    if (got.components.size() != ref.size()) return false;
    std::vector<std::vector<std::pair<int, int>>> members(got.components.size());
    for (std::size_t i = 0; i < got.labels.size(); ++i) {
        const int l = got.labels[i];
        if (l == 0) continue;
        members[static_cast<std::size_t>(l - 1)].push_back({static_cast<int>(i) / w, static_cast<int>(i) % w});
    }
    for (const auto& blob : ref) {
        const int l = got.labels[static_cast<std::size_t>(blob.pixels.front().first) * w +
                                 blob.pixels.front().second];
        if (l <= 0) return false;
        const auto& c = got.components[static_cast<std::size_t>(l - 1)];
        auto m = members[static_cast<std::size_t>(l - 1)];
        std::sort(m.begin(), m.end());
        if (m != blob.pixels) return false;
        if (c.box != Bbox{blob.x0, blob.y0, blob.x1 - blob.x0 + 1, blob.y1 - blob.y0 + 1}) return false;
        if (c.pixel_count != static_cast<int>(blob.pixels.size())) return false;
        if (c.label != l) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("components match flood fill on random masks") {
    std::mt19937_64 rng(1234);
    int matched = 0;
    for (int i = 0; i < 200; ++i) {
        const auto m = random_mask(rng, 64, 64);
        if (same_components(label_mask(m, 64, 64), oracle::flood_fill(m, 64, 64), 64)) ++matched;
    }
    CHECK(matched == 200);
}

TEST_CASE("threshold components on a float slice") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<float> u(0, 4);
    std::vector<float> v(40 * 30);
    for (auto& x : v) x = u(rng);
    const SliceView s{v, 40, 30};
    std::vector<std::uint8_t> m(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) m[i] = v[i] >= 2.5f;
    const auto ref = oracle::flood_fill(m, 40, 30);
    CHECK(same_components(label_components(s, 2.5), ref, 40));
    CHECK(threshold_components(s, 2.5).size() == ref.size());
}

TEST_CASE("component edge cases") {
    std::vector<float> zero(16, 0.0f);
    CHECK(threshold_components(SliceView{zero, 4, 4}, 1.0).empty());
    CHECK_THROWS_AS(threshold_components(SliceView{zero, 4, 4}, 0.0), InvalidArgument);

    std::vector<std::uint8_t> diag{1, 0, 0, 1};
    const auto l = label_mask(diag, 2, 2);
    REQUIRE(l.components.size() == 1);
    CHECK(l.components[0].box == Bbox{0, 0, 2, 2});
    CHECK(l.components[0].pixel_count == 2);

    // Components come out ordered by box top, then left.
    std::vector<std::uint8_t> m{0, 0, 1,
                                1, 0, 0,
                                0, 0, 0};
    const auto two = label_mask(m, 3, 3);
    REQUIRE(two.components.size() == 2);
    CHECK(two.components[0].box == Bbox{2, 0, 1, 1});
    CHECK(two.components[1].box == Bbox{0, 1, 1, 1});
}

TEST_CASE("26-connected 3D components match a BFS oracle") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        LabelVolume v(Dims{12, 11, 7}, Spacing{});
        std::bernoulli_distribution b(0.12);
        for (auto& x : v.labels) x = b(rng) ? 1 + static_cast<int>(rng() % 3) : 0;
        const auto got = connected_components_3d(v);

        std::vector<int> seen(v.labels.size(), 0);
        int count = 0;
        bool consistent = true;
        for (int z = 0; z < 7; ++z)
            for (int y = 0; y < 11; ++y)
                for (int x = 0; x < 12; ++x) {
                    if (!v.at(x, y, z) || seen[v.index(x, y, z)]) continue;
                    ++count;
                    const int id = got.ids[v.index(x, y, z)];
                    std::int64_t size = 0;
                    std::deque<std::array<int, 3>> q{{x, y, z}};
                    seen[v.index(x, y, z)] = 1;
                    while (!q.empty()) {
                        auto [cx, cy, cz] = q.front();
                        q.pop_front();
                        ++size;
                        consistent = consistent && got.ids[v.index(cx, cy, cz)] == id;
                        for (int dz = -1; dz <= 1; ++dz)
                            for (int dy = -1; dy <= 1; ++dy)
                                for (int dx = -1; dx <= 1; ++dx) {
                                    const int nx = cx + dx, ny = cy + dy, nz = cz + dz;
                                    if (nx < 0 || ny < 0 || nz < 0 || nx >= 12 || ny >= 11 || nz >= 7) continue;
                                    const auto k = v.index(nx, ny, nz);
                                    if (v.labels[k] && !seen[k]) {
                                        seen[k] = 1;
                                        q.push_back({nx, ny, nz});
                                    }
                                }
                    }
                    consistent = consistent && id > 0 && got.sizes[static_cast<std::size_t>(id - 1)] == size;
                }
        CHECK(consistent);
        CHECK(got.count == count);
    }
}
