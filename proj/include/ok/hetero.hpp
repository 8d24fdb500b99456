#pragma once

// Heterogeneity correction: pairwise p-value similarity matrices over the
// K+1 subjects, average-linkage (UPGMA) clustering on similarities, the
// "case merges last" approval rule, height cuts, and dendrogram export.
//
// Conventions:
//   - similarity = pairwise p-value in [0, 1]; merge height = 1 - similarity
//     (so a cut at 0.99 separates clusters whose similarity is below 0.01).
//   - leaves are labeled 1..n; the t-th merge (0-based) creates node n+1+t.
//   - cluster pairs are compared by (average similarity desc, left id asc,
//     right id asc), which makes runs fully deterministic under ties.
//
// The per-pair test seed is derived from an unordered hash of the two
// samples' contents and each unordered pair is evaluated in a canonical
// content-determined orientation, so permuting the subject order permutes
// rows and columns of the matrix exactly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ok/ad.hpp"
#include "ok/errors.hpp"
#include "ok/rng.hpp"

namespace ok {

struct SimilarityMatrix {
    int size = 0;
    std::vector<double> values;  // row-major size x size

    double at(int i, int j) const {
        if (i < 0 || j < 0 || i >= size || j >= size) {
            throw OutOfRange("SimilarityMatrix::at: index out of range");
        }
        return values[static_cast<std::size_t>(i) * size + j];
    }
    double& at(int i, int j) {
        if (i < 0 || j < 0 || i >= size || j >= size) {
            throw OutOfRange("SimilarityMatrix::at: index out of range");
        }
        return values[static_cast<std::size_t>(i) * size + j];
    }
};

struct Merge {
    int left = 0;   // node id: leaf 1..n or internal n+1..2n-1
    int right = 0;  // node id, always > left
    double similarity = 0.0;
    double height = 0.0;  // 1 - similarity
};

struct Dendrogram {
    int n_leaves = 0;
    std::vector<Merge> merges;  // exactly n_leaves - 1 records, heights nondecreasing
};

// A pairwise p-value backend: (sample a, sample b, seed) -> p-value.
using PairTest = std::function<double(std::span<const double>, std::span<const double>, std::uint64_t)>;

// The Anderson-Darling permutation backend.
inline PairTest ad_pair_test(int n_perm = kDefaultNPerm) {
    return [n_perm](std::span<const double> a, std::span<const double> b, std::uint64_t seed) {
        return ad2_pvalue(a, b, n_perm, seed).p_value;
    };
}

namespace detail {

inline void check_similarity(const SimilarityMatrix& sim) {
    if (sim.size < 2) throw ShapeMismatch("similarity matrix needs at least two subjects");
    if (sim.values.size() != static_cast<std::size_t>(sim.size) * sim.size) {
        throw ShapeMismatch("similarity matrix storage does not match its size");
    }
    for (int i = 0; i < sim.size; ++i) {
        if (sim.at(i, i) != 1.0) throw ShapeMismatch("similarity diagonal must be exactly 1");
        for (int j = 0; j < sim.size; ++j) {
            const double v = sim.at(i, j);
            if (!(v >= 0.0 && v <= 1.0)) throw OutOfRange("similarity entries must lie in [0, 1]");
            if (std::abs(v - sim.at(j, i)) > 1e-12) {
                throw ShapeMismatch("similarity matrix must be symmetric");
            }
        }
    }
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

// Entry (i, j) is the pairwise p-value between subjects i and j, computed
// once per unordered pair in a content-canonical orientation; the diagonal
// is exactly 1 without running a self-test.
inline SimilarityMatrix similarity_matrix(const std::vector<std::vector<double>>& subjects,
                                          const PairTest& pair_test, std::uint64_t seed) {
    const int n = static_cast<int>(subjects.size());
    if (n < 2) throw InvalidRange("similarity_matrix: need at least two subjects");
    SimilarityMatrix sim;
    sim.size = n;
    sim.values.assign(static_cast<std::size_t>(n) * n, 1.0);
    std::vector<std::uint64_t> hashes(n);
    for (int i = 0; i < n; ++i) hashes[i] = rng::hash_doubles(subjects[i]);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const std::uint64_t s =
                rng::derive(seed, 0x51b1ULL, rng::unordered_pair_tag(hashes[i], hashes[j]));
            const bool flip = hashes[j] < hashes[i];
            const auto& a = flip ? subjects[j] : subjects[i];
            const auto& b = flip ? subjects[i] : subjects[j];
            const double p = pair_test(a, b, s);
            sim.at(i, j) = p;
            sim.at(j, i) = p;
        }
    }
    return sim;
}

// Greedy agglomeration maximizing the average cross-pair similarity (UPGMA
// on similarities). The weighted update is clamped so merge similarities are
// nonincreasing exactly, not merely up to rounding.
inline Dendrogram average_linkage(const SimilarityMatrix& sim) {
    detail::check_similarity(sim);
    const int n = sim.size;
    const int total = 2 * n - 1;
    // avg[a][b] holds the average similarity between active clusters a and b,
    // indexed by node id - 1.
    std::vector<std::vector<double>> avg(total, std::vector<double>(total, 0.0));
    std::vector<int> csize(total, 0);
    std::vector<int> active;
    for (int i = 0; i < n; ++i) {
        csize[i] = 1;
        active.push_back(i + 1);
        for (int j = 0; j < n; ++j) avg[i][j] = sim.at(i, j);
    }
    Dendrogram out;
    out.n_leaves = n;
    out.merges.reserve(n - 1);
    for (int t = 0; t < n - 1; ++t) {
        int bi = -1, bj = -1;
        double best = -1.0;
        for (std::size_t a = 0; a < active.size(); ++a) {
            for (std::size_t b = a + 1; b < active.size(); ++b) {
                const int i = std::min(active[a], active[b]);
                const int j = std::max(active[a], active[b]);
                const double v = avg[i - 1][j - 1];
                if (v > best || (v == best && (i < bi || (i == bi && j < bj)))) {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        }
        const int node = n + 1 + t;
        const int ni = csize[bi - 1];
        const int nj = csize[bj - 1];
        csize[node - 1] = ni + nj;
        for (int other : active) {
            if (other == bi || other == bj) continue;
            const double si = avg[bi - 1][other - 1];
            const double sj = avg[bj - 1][other - 1];
            // Clamp: the weighted mean cannot exceed max(si, sj) exactly.
            const double v = std::min((ni * si + nj * sj) / (ni + nj), std::max(si, sj));
            avg[node - 1][other - 1] = v;
            avg[other - 1][node - 1] = v;
        }
        active.erase(std::remove_if(active.begin(), active.end(),
                                    [bi, bj](int id) { return id == bi || id == bj; }),
                     active.end());
        active.push_back(node);
        out.merges.push_back({bi, bj, best, 1.0 - best});
    }
    return out;
}

// True iff the case leaf is joined to the tree only at the final merge.
inline bool hc_approved(const Dendrogram& dendro, int case_index) {
    if (case_index < 1 || case_index > dendro.n_leaves) {
        throw UnknownLeaf("hc_approved: case index is not a leaf label");
    }
    if (dendro.merges.empty()) return true;
    const Merge& last = dendro.merges.back();
    return last.left == case_index || last.right == case_index;
}

// Clusters induced by removing merges with height strictly above the cut.
inline std::vector<std::vector<int>> cut(const Dendrogram& dendro, double height) {
    if (!(height >= 0.0 && height <= 1.0)) throw InvalidRange("cut: height must lie in [0, 1]");
    const int n = dendro.n_leaves;
    std::vector<int> parent(2 * n, 0);
    for (int i = 0; i < 2 * n; ++i) parent[i] = i;
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (std::size_t t = 0; t < dendro.merges.size(); ++t) {
        const Merge& m = dendro.merges[t];
        if (m.height > height) continue;
        const int node = n + 1 + static_cast<int>(t);
        parent[find(m.left)] = find(node);
        parent[find(m.right)] = find(node);
    }
    std::vector<std::vector<int>> groups;
    std::vector<int> root_to_group(2 * n, -1);
    for (int leaf = 1; leaf <= n; ++leaf) {
        const int r = find(leaf);
        if (root_to_group[r] < 0) {
            root_to_group[r] = static_cast<int>(groups.size());
            groups.emplace_back();
        }
        groups[root_to_group[r]].push_back(leaf);
    }
    std::sort(groups.begin(), groups.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return groups;
}

struct RegionPvalue {
    int region = 0;
    double p_adjusted = 1.0;
};

struct RegionApproval {
    int region = 0;
    bool approved = false;
};

struct HcFilterConfig {
    PairTest pair_test = ad_pair_test();
    std::uint64_t seed = 0;
    int case_position = 0;       // index of the case within each subject list
    bool average_rule = false;   // looser rule: approve unless some case
                                 // similarity exceeds the within-control mean
};

// For each already-significant region, build the similarity matrix from that
// region's subject samples, cluster, and keep the region iff approved.
inline std::vector<RegionApproval> apply_hc_filter(
    const std::vector<RegionPvalue>& region_results,
    const std::function<std::vector<std::vector<double>>(int)>& subjects_for_region,
    const HcFilterConfig& config) {
    std::vector<RegionApproval> out;
    out.reserve(region_results.size());
    for (const auto& rp : region_results) {
        const auto subjects = subjects_for_region(rp.region);
        const int n = static_cast<int>(subjects.size());
        if (config.case_position < 0 || config.case_position >= n) {
            throw OutOfRange("apply_hc_filter: case position out of range");
        }
        const SimilarityMatrix sim = similarity_matrix(subjects, config.pair_test, config.seed);
        bool ok_region;
        if (config.average_rule) {
            double within = 0.0;
            int pairs = 0;
            double case_max = 0.0;
            for (int i = 0; i < n; ++i) {
                for (int j = i + 1; j < n; ++j) {
                    if (i == config.case_position || j == config.case_position) {
                        case_max = std::max(case_max, sim.at(i, j));
                    } else {
                        within += sim.at(i, j);
                        ++pairs;
                    }
                }
            }
            ok_region = pairs == 0 || case_max <= within / pairs;
        } else {
            ok_region = hc_approved(average_linkage(sim), config.case_position + 1);
        }
        out.push_back({rp.region, ok_region});
    }
    return out;
}

// Newick text with branch lengths equal to merge-height differences.
inline std::string export_newick(const Dendrogram& dendro) {
    if (dendro.n_leaves < 1) throw ShapeMismatch("export_newick: empty dendrogram");
    std::string out;
    if (dendro.merges.empty()) {
        out = "1;";
        return out;
    }
    // Recursive writer: a node's branch length is its parent's height minus
    // its own height (leaves sit at height 0).
    std::function<void(int, double)> write = [&](int node, double parent_height) {
        if (node <= dendro.n_leaves) {
            out += std::to_string(node);
            out += ':';
            out += detail::format_double(parent_height);
            return;
        }
        const Merge& m = dendro.merges[static_cast<std::size_t>(node - dendro.n_leaves - 1)];
        out += '(';
        write(m.left, m.height);
        out += ',';
        write(m.right, m.height);
        out += ')';
        if (node != dendro.n_leaves + static_cast<int>(dendro.merges.size())) {
            out += ':';
            out += detail::format_double(parent_height - m.height);
        }
    };
    write(dendro.n_leaves + static_cast<int>(dendro.merges.size()), 0.0);
    out += ';';
    return out;
}

// Merge records as a compact JSON document.
inline std::string export_merges_json(const Dendrogram& dendro) {
    std::string out = "{\"n_leaves\":" + std::to_string(dendro.n_leaves) + ",\"merges\":[";
    for (std::size_t t = 0; t < dendro.merges.size(); ++t) {
        const Merge& m = dendro.merges[t];
        if (t > 0) out += ',';
        out += "{\"left\":" + std::to_string(m.left) + ",\"right\":" + std::to_string(m.right) +
               ",\"similarity\":" + detail::format_double(m.similarity) +
               ",\"height\":" + detail::format_double(m.height) + "}";
    }
    out += "]}";
    return out;
}

}  // namespace ok
