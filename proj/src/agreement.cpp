#include "gazepet/agreement.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "gazepet/error.hpp"
#include "gazepet/icc.hpp"

namespace gazepet {

std::int64_t intersection_voxels(const Box3D& a, const Box3D& b) {
    const std::int64_t w = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const std::int64_t h = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    const std::int64_t d = std::min(a.z_max, b.z_max) - std::max(a.z_min, b.z_min) + 1;
    return (w > 0 && h > 0 && d > 0) ? w * h * d : 0;
}

double iou3d(const Box3D& a, const Box3D& b) {
    const auto inter = intersection_voxels(a, b);
    if (inter == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(a.voxels() + b.voxels() - inter);
}

std::vector<Box3D> merge_slices_to_3d(const std::vector<LesionAnnotation>& lesions) {
    std::vector<Box3D> out;
    for (const auto& l : lesions) {
        if (l.slice_boxes.empty()) continue;
        int x0 = INT32_MAX, y0 = INT32_MAX, x1 = INT32_MIN, y1 = INT32_MIN;
        for (const auto& [z, sb] : l.slice_boxes) {
            x0 = std::min(x0, sb.box.x);
            y0 = std::min(y0, sb.box.y);
            x1 = std::max(x1, sb.box.x_end());
            y1 = std::max(y1, sb.box.y_end());
        }
        out.push_back(Box3D{x0, y0, x1 - x0, y1 - y0, l.slice_boxes.begin()->first,
                            l.slice_boxes.rbegin()->first});
    }
    return out;
}

namespace {

double ratio(std::size_t num, std::size_t den, bool other_empty) {
    if (den == 0) return other_empty ? 1.0 : 0.0;
    return static_cast<double>(num) / static_cast<double>(den);
}

Agreement finish(std::vector<BoxMatch> matches, std::size_t na, std::size_t nb) {
    Agreement out;
    std::sort(matches.begin(), matches.end(),
              [](const BoxMatch& x, const BoxMatch& y) { return x.a < y.a; });
    std::vector<bool> ua(na, true), ub(nb, true);
    for (const auto& m : matches) {
        ua[m.a] = false;
        ub[m.b] = false;
    }
    for (std::size_t i = 0; i < na; ++i) {
        if (ua[i]) out.unmatched_a.push_back(i);
    }
    for (std::size_t j = 0; j < nb; ++j) {
        if (ub[j]) out.unmatched_b.push_back(j);
    }
    out.tp = matches.size();
    out.fp = na - out.tp;
    out.fn = nb - out.tp;
    out.matches = std::move(matches);
    out.precision = ratio(out.tp, na, nb == 0);
    out.recall = ratio(out.tp, nb, na == 0);
    out.pct_agreement = ratio(out.tp, out.tp + out.fp + out.fn, true);
    return out;
}

}  // namespace

Agreement match_and_agree(const std::vector<Box3D>& a, const std::vector<Box3D>& b) {
    std::vector<BoxMatch> pairs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double v = iou3d(a[i], b[j]);
            if (v > 0) pairs.push_back({i, j, v});
        }
    }
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const BoxMatch& x, const BoxMatch& y) { return x.iou > y.iou; });
    std::vector<bool> used_a(a.size()), used_b(b.size());
    std::vector<BoxMatch> matches;
    for (const auto& p : pairs) {
        if (used_a[p.a] || used_b[p.b]) continue;
        used_a[p.a] = used_b[p.b] = true;
        matches.push_back(p);
    }
    return finish(std::move(matches), a.size(), b.size());
}

Agreement match_and_agree_exact(const std::vector<Box3D>& a, const std::vector<Box3D>& b) {
    std::vector<std::vector<std::size_t>> adj(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (intersection_voxels(a[i], b[j]) > 0) adj[i].push_back(j);
        }
    }
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::vector<std::size_t> owner(b.size(), kNone);
    std::vector<bool> seen;
    std::function<bool(std::size_t)> augment = [&](std::size_t i) {
        for (const std::size_t j : adj[i]) {
            if (seen[j]) continue;
            seen[j] = true;
            if (owner[j] == kNone || augment(owner[j])) {
                owner[j] = i;
                return true;
            }
        }
        return false;
    };
    for (std::size_t i = 0; i < a.size(); ++i) {
        seen.assign(b.size(), false);
        augment(i);
    }
    std::vector<BoxMatch> matches;
    for (std::size_t j = 0; j < b.size(); ++j) {
        if (owner[j] != kNone) matches.push_back({owner[j], j, iou3d(a[owner[j]], b[j])});
    }
    return finish(std::move(matches), a.size(), b.size());
}

AgreementReport agree_sets(const std::vector<std::string>& names,
                           const std::vector<std::vector<LesionAnnotation>>& sets) {
    if (names.size() != sets.size()) throw InvalidArgument("one name per annotation set");
    if (sets.size() < 2) throw InvalidArgument("agreement needs at least two annotation sets");
    std::vector<std::vector<Box3D>> boxes;
    for (const auto& s : sets) boxes.push_back(merge_slices_to_3d(s));

    AgreementReport report;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        for (std::size_t j = i + 1; j < sets.size(); ++j) {
            PairReport p;
            p.name_a = names[i];
            p.name_b = names[j];
            p.agreement = match_and_agree(boxes[i], boxes[j]);
            std::vector<std::vector<double>> m;
            for (const auto& mt : p.agreement.matches) {
                m.push_back({static_cast<double>(boxes[i][mt.a].voxels()),
                             static_cast<double>(boxes[j][mt.b].voxels())});
            }
            try {
                const auto icc = icc_average_fixed_raters(m);
                p.icc = icc.icc;
                p.icc_ci_low = icc.ci_low;
                p.icc_ci_high = icc.ci_high;
            } catch (const Error& e) {
                p.icc_note = e.what();
            }
            report.pairs.push_back(std::move(p));
        }
    }
    return report;
}

nlohmann::json AgreementReport::to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& p : pairs) {
        const auto& a = p.agreement;
        nlohmann::json j{{"a", p.name_a},       {"b", p.name_b},           {"precision", a.precision},
                         {"recall", a.recall},  {"pct_agreement", a.pct_agreement},
                         {"tp", a.tp},          {"fp", a.fp},              {"fn", a.fn}};
        j["icc"] = p.icc ? nlohmann::json(*p.icc) : nlohmann::json();
        j["icc_ci95"] = p.icc ? nlohmann::json{*p.icc_ci_low, *p.icc_ci_high} : nlohmann::json();
        if (!p.icc_note.empty()) j["icc_note"] = p.icc_note;
        j["matches"] = nlohmann::json::array();
        for (const auto& m : a.matches) j["matches"].push_back({m.a, m.b, m.iou});
        j["unmatched_a"] = a.unmatched_a;
        j["unmatched_b"] = a.unmatched_b;
        out.push_back(std::move(j));
    }
    return {{"pairs", out}};
}

std::string AgreementReport::to_csv() const {
    std::ostringstream os;
    os.precision(4);
    os << std::fixed;
    os << "pair,precision,recall,pct_agreement,icc,icc_ci_low,icc_ci_high,tp,fp,fn\n";
    for (const auto& p : pairs) {
        const auto& a = p.agreement;
        os << p.name_a << " vs " << p.name_b << ',' << a.precision << ',' << a.recall << ','
           << a.pct_agreement << ',';
        if (p.icc) {
            os << *p.icc << ',' << *p.icc_ci_low << ',' << *p.icc_ci_high;
        } else {
            os << ",,";
        }
        os << ',' << a.tp << ',' << a.fp << ',' << a.fn << '\n';
    }
    return os.str();
}

}  // namespace gazepet
