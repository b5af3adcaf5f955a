#include "gazepet/components.hpp"

#include <algorithm>
#include <numeric>

#include "gazepet/error.hpp"

namespace gazepet {
namespace {

class DisjointSet {
public:
    int make() {
        parent_.push_back(static_cast<int>(parent_.size()));
        return parent_.back();
    }
    int find(int a) {
        while (parent_[a] != a) {
            parent_[a] = parent_[parent_[a]];
            a = parent_[a];
        }
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<int> parent_;
};

// Two-pass labelling: provisional labels with union-find over the four
// already-visited 8-neighbours, then resolution and bbox accumulation.
template <typename IsForeground>
ComponentLabeling two_pass(int width, int height, IsForeground fg) {
    ComponentLabeling out;
    out.width = width;
    out.height = height;
    out.labels.assign(static_cast<std::size_t>(width) * height, 0);
    if (width == 0 || height == 0) return out;

    std::vector<int> provisional(out.labels.size(), -1);
    DisjointSet sets;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * width + x;
            if (!fg(i)) continue;
            int label = -1;
            const auto visit = [&](int nx, int ny) {
                if (nx < 0 || ny < 0 || nx >= width) return;
                const int n = provisional[static_cast<std::size_t>(ny) * width + nx];
                if (n < 0) return;
                if (label < 0) {
                    label = n;
                } else {
                    sets.unite(label, n);
                }
            };
            visit(x - 1, y);
            visit(x - 1, y - 1);
            visit(x, y - 1);
            visit(x + 1, y - 1);
            provisional[i] = label < 0 ? sets.make() : label;
        }
    }

    struct Acc {
        int min_x, min_y, max_x, max_y, count;
        std::size_t first;
    };
    std::vector<int> root_slot;
    std::vector<Acc> acc;
    std::vector<int> slot_of(provisional.size(), -1);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * width + x;
            if (provisional[i] < 0) continue;
            const int root = sets.find(provisional[i]);
            if (static_cast<std::size_t>(root) >= root_slot.size()) root_slot.resize(root + 1, -1);
            if (root_slot[root] < 0) {
                root_slot[root] = static_cast<int>(acc.size());
                acc.push_back({x, y, x, y, 0, i});
            }
            Acc& a = acc[root_slot[root]];
            a.min_x = std::min(a.min_x, x);
            a.max_x = std::max(a.max_x, x);
            a.max_y = std::max(a.max_y, y);
            ++a.count;
            slot_of[i] = root_slot[root];
        }
    }

    std::vector<int> order(acc.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const Acc& l = acc[a];
        const Acc& r = acc[b];
        if (l.min_y != r.min_y) return l.min_y < r.min_y;
        if (l.min_x != r.min_x) return l.min_x < r.min_x;
        return l.first < r.first;
    });
    std::vector<int> final_label(acc.size());
    out.components.reserve(acc.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        const Acc& a = acc[order[k]];
        final_label[order[k]] = static_cast<int>(k) + 1;
        out.components.push_back(Component{
            Bbox{a.min_x, a.min_y, a.max_x - a.min_x + 1, a.max_y - a.min_y + 1}, a.count,
            static_cast<int>(k) + 1});
    }
    for (std::size_t i = 0; i < slot_of.size(); ++i) {
        if (slot_of[i] >= 0) out.labels[i] = final_label[slot_of[i]];
    }
    return out;
}

}  // namespace

ComponentLabeling label_components(const SliceView& slice, double threshold) {
    if (!(threshold > 0)) throw InvalidArgument("threshold must be > 0");
    const float* v = slice.values.data();
    return two_pass(slice.width, slice.height,
                    [v, threshold](std::size_t i) { return v[i] >= threshold; });
}

ComponentLabeling label_mask(const std::vector<std::uint8_t>& mask, int width, int height) {
    if (mask.size() != static_cast<std::size_t>(width) * height) {
        throw InvalidArgument("mask size does not match dimensions");
    }
    return two_pass(width, height, [&mask](std::size_t i) { return mask[i] != 0; });
}

std::vector<Component> threshold_components(const SliceView& slice, double threshold) {
    return label_components(slice, threshold).components;
}

Labeling3D connected_components_3d(const LabelVolume& mask) {
    const Dims& d = mask.dims;
    Labeling3D out;
    out.ids.assign(mask.labels.size(), 0);
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < mask.labels.size(); ++start) {
        if (mask.labels[start] == 0 || out.ids[start] != 0) continue;
        const int id = ++out.count;
        std::int64_t size = 0;
        out.ids[start] = id;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            ++size;
            const int x = static_cast<int>(i % d.nx);
            const int y = static_cast<int>((i / d.nx) % d.ny);
            const int z = static_cast<int>(i / (static_cast<std::size_t>(d.nx) * d.ny));
            for (int dz = -1; dz <= 1; ++dz)
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = x + dx, ny = y + dy, nz = z + dz;
                        if (nx < 0 || ny < 0 || nz < 0 || nx >= d.nx || ny >= d.ny || nz >= d.nz)
                            continue;
                        const std::size_t j = mask.index(nx, ny, nz);
                        if (mask.labels[j] != 0 && out.ids[j] == 0) {
                            out.ids[j] = id;
                            stack.push_back(j);
                        }
                    }
        }
        out.sizes.push_back(size);
    }
    return out;
}

}  // namespace gazepet
