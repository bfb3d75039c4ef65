// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "quanta/dense_tensor.hpp"
#include "quanta/error.hpp"

namespace quanta {

/// A contraction expression over single-character subscripts, with "..." as the
/// batch marker. operand_count includes the state operand when present.
struct EinsumExpr {
    std::string text;
    std::size_t operand_count = 0;
};

/// Deterministic subscript alphabet: 0-25 -> 'a'-'z', 26-51 -> 'A'-'Z',
/// 52-61 -> '0'-'9'.
inline char subscript_symbol(std::size_t i) {
    static const char* table =
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    if (i >= 62)
        throw DimensionError("subscript alphabet exhausted (index " + std::to_string(i) + ")");
    return table[i];
}

inline int subscript_index(char c) {
    if (c >= 'a' && c <= 'z') return c - 'a';
    if (c >= 'A' && c <= 'Z') return 26 + (c - 'A');
    if (c >= '0' && c <= '9') return 52 + (c - '0');
    return -1;
}

/// Unordered axis pairs in circuit application order: the combination iteration
/// runs over negative axis positions (-1, -2, ..., -N) so the first gate acts on
/// the last two axes. Returned as zero-based (m, n) with m < n.
inline std::vector<std::pair<std::size_t, std::size_t>> all_pairs_gate_axes(std::size_t n_axes) {
    if (n_axes < 2) throw DimensionError("axis pairs need at least 2 axes");
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t a = 1; a < n_axes; ++a)          // dim1 = -a
        for (std::size_t b = a + 1; b <= n_axes; ++b) // dim2 = -b
            pairs.emplace_back(n_axes - b, n_axes - a);
    return pairs;
}

namespace detail {

// Shared walk for both expression generators: returns the gate subscript blocks
// plus the initial and final per-axis symbol assignments.
struct ExprWalk {
    std::string initial;
    std::string final_;
    std::vector<std::string> gate_blocks;
};

inline ExprWalk walk_all_pairs(std::size_t n) {
    if (n < 2) throw DimensionError("expression generation needs n_axes >= 2");
    if (n * n > 62)
        throw DimensionError("expression generation supports n_axes <= 7 "
                             "(subscript alphabet exhausted)");
    std::vector<std::size_t> cur(n);
    for (std::size_t i = 0; i < n; ++i) cur[i] = i;

    ExprWalk w;
    for (std::size_t i : cur) w.initial += subscript_symbol(i);

    for (std::size_t a = 1; a < n; ++a) {
        for (std::size_t b = a + 1; b <= n; ++b) {
            // dim1 = -a (later axis), dim2 = -b (earlier axis)
            const std::size_t s1 = cur[n - a];
            const std::size_t s2 = cur[n - b];
            const std::size_t s3 = s1 + n;
            const std::size_t s4 = s2 + n;
            std::string block;
            block += subscript_symbol(s4);
            block += subscript_symbol(s3);
            block += subscript_symbol(s2);
            block += subscript_symbol(s1);
            w.gate_blocks.push_back(block);
            cur[n - a] = s3;
            cur[n - b] = s4;
        }
    }
    for (std::size_t i : cur) w.final_ += subscript_symbol(i);
    return w;
}

}  // namespace detail

/// Expression applying one gate per unordered axis pair to a batched state
/// tensor. Operand order: the state first, then the gates in application order.
inline EinsumExpr gen_apply_expr(std::size_t n_axes) {
    const auto w = detail::walk_all_pairs(n_axes);
    std::string text = "..." + w.initial;
    for (const auto& block : w.gate_blocks) {
        text += ',';
        text += block;
    }
    text += "->...";
    text += w.final_;
    return EinsumExpr{text, 1 + w.gate_blocks.size()};
}

/// Expression contracting the gate tensors alone into the full circuit operator,
/// output axes ordered (out-axes, in-axes).
inline EinsumExpr gen_operator_expr(std::size_t n_axes) {
    const auto w = detail::walk_all_pairs(n_axes);
    std::string text;
    for (std::size_t i = 0; i < w.gate_blocks.size(); ++i) {
        if (i) text += ',';
        text += w.gate_blocks[i];
    }
    text += "->";
    text += w.final_;
    text += w.initial;
    return EinsumExpr{text, w.gate_blocks.size()};
}

/// Pairwise contraction order. Both orders are deterministic; fixed_lr folds the
/// operands strictly left to right for bitwise reproducibility, greedy picks the
/// cheapest pair at each step.
enum class ContractOrder { greedy, fixed_lr };

namespace detail {

struct ParsedExpr {
    std::vector<std::string> inputs;
    std::vector<bool> input_ellipsis;
    std::string output;
    bool output_ellipsis = false;
};

inline ParsedExpr parse_expr(const std::string& text) {
    const auto arrow = text.find("->");
    if (arrow == std::string::npos)
        throw ContractionError("expression needs '->': " + text);
    ParsedExpr p;
    std::string lhs = text.substr(0, arrow);
    std::string rhs = text.substr(arrow + 2);

    auto parse_term = [&](const std::string& term, std::string& subs, bool& ellipsis) {
        ellipsis = false;
        std::size_t pos = 0;
        if (term.rfind("...", 0) == 0) {
            ellipsis = true;
            pos = 3;
        }
        for (; pos < term.size(); ++pos) {
            const char c = term[pos];
            if (c == '.') throw ContractionError("ellipsis only allowed as a prefix: " + term);
            if (subscript_index(c) < 0)
                throw ContractionError(std::string("bad subscript character '") + c + "'");
            if (subs.find(c) != std::string::npos)
                throw ContractionError(std::string("repeated subscript '") + c +
                                       "' within one operand");
            subs += c;
        }
    };

    std::size_t start = 0;
    while (true) {
        const auto comma = lhs.find(',', start);
        const std::string term =
            comma == std::string::npos ? lhs.substr(start) : lhs.substr(start, comma - start);
        std::string subs;
        bool ell = false;
        parse_term(term, subs, ell);
        p.inputs.push_back(subs);
        p.input_ellipsis.push_back(ell);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    parse_term(rhs, p.output, p.output_ellipsis);

    bool any_ell = false;
    for (bool e : p.input_ellipsis) any_ell = any_ell || e;
    if (any_ell != p.output_ellipsis)
        throw ContractionError("batch ellipsis must appear on both sides or neither: " + text);
    return p;
}

// Internal operand during pairwise evaluation. Label -1 is the flattened batch
// axis; labels >= 0 are subscript indices.
struct Term {
    std::vector<int> labels;
    std::vector<std::size_t> extents;
    std::vector<double> data;

    std::size_t size() const {
        std::size_t s = 1;
        for (std::size_t e : extents) s *= e;
        return s;
    }
};

// Copy with axes reordered so that out axis k is in axis perm[k].
inline Term permuted(const Term& t, const std::vector<std::size_t>& perm) {
    const std::size_t rank = t.extents.size();
    Term out;
    out.labels.resize(rank);
    out.extents.resize(rank);
    for (std::size_t k = 0; k < rank; ++k) {
        out.labels[k] = t.labels[perm[k]];
        out.extents[k] = t.extents[perm[k]];
    }
    out.data.resize(t.data.size());
    if (rank == 0) {
        out.data = t.data;
        return out;
    }
    std::vector<std::size_t> in_strides(rank, 1);
    for (std::size_t k = rank - 1; k > 0; --k)
        in_strides[k - 1] = in_strides[k] * t.extents[k];
    std::vector<std::size_t> step(rank);
    for (std::size_t k = 0; k < rank; ++k) step[k] = in_strides[perm[k]];

    std::vector<std::size_t> idx(rank, 0);
    std::size_t src = 0;
    const std::size_t n = out.data.size();
    for (std::size_t dst = 0; dst < n; ++dst) {
        out.data[dst] = t.data[src];
        for (std::size_t k = rank; k-- > 0;) {
            ++idx[k];
            src += step[k];
            if (idx[k] < out.extents[k]) break;
            src -= step[k] * out.extents[k];
            idx[k] = 0;
        }
    }
    return out;
}

// Sum out every label not satisfying keep(); kept axes stay in order.
template <typename Keep>
inline Term reduce_term(const Term& t, Keep keep) {
    std::vector<std::size_t> kept, dropped;
    for (std::size_t k = 0; k < t.labels.size(); ++k)
        (keep(t.labels[k]) ? kept : dropped).push_back(k);
    if (dropped.empty()) return t;
    std::vector<std::size_t> perm = kept;
    perm.insert(perm.end(), dropped.begin(), dropped.end());
    Term p = permuted(t, perm);
    std::size_t keep_n = 1, drop_n = 1;
    for (std::size_t k = 0; k < kept.size(); ++k) keep_n *= p.extents[k];
    for (std::size_t k = kept.size(); k < p.extents.size(); ++k) drop_n *= p.extents[k];
    Term out;
    out.labels.assign(p.labels.begin(), p.labels.begin() + kept.size());
    out.extents.assign(p.extents.begin(), p.extents.begin() + kept.size());
    out.data.assign(keep_n, 0.0);
    for (std::size_t i = 0; i < keep_n; ++i) {
        double acc = 0.0;
        const double* src = p.data.data() + i * drop_n;
        for (std::size_t k = 0; k < drop_n; ++k) acc += src[k];
        out.data[i] = acc;
    }
    return out;
}

inline Term contract_pair(const Term& a_in, const Term& b_in, const std::set<int>& needed) {
    auto in_b = [&](int l) {
        return std::find(b_in.labels.begin(), b_in.labels.end(), l) != b_in.labels.end();
    };
    auto in_a = [&](int l) {
        return std::find(a_in.labels.begin(), a_in.labels.end(), l) != a_in.labels.end();
    };
    // Labels private to one operand and not needed downstream are summed first.
    Term a = reduce_term(a_in, [&](int l) { return in_b(l) || needed.count(l); });
    Term b = reduce_term(b_in, [&](int l) { return in_a(l) || needed.count(l); });

    std::vector<int> batch, sum, keep_a, keep_b;
    for (int l : a.labels) {
        if (std::find(b.labels.begin(), b.labels.end(), l) != b.labels.end())
            (needed.count(l) ? batch : sum).push_back(l);
        else
            keep_a.push_back(l);
    }
    for (int l : b.labels)
        if (std::find(a.labels.begin(), a.labels.end(), l) == a.labels.end())
            keep_b.push_back(l);

    auto perm_for = [](const Term& t, const std::vector<int>& first,
                       const std::vector<int>& second, const std::vector<int>& third) {
        std::vector<std::size_t> perm;
        auto push = [&](const std::vector<int>& labels) {
            for (int l : labels) {
                const auto it = std::find(t.labels.begin(), t.labels.end(), l);
                perm.push_back(static_cast<std::size_t>(it - t.labels.begin()));
            }
        };
        push(first);
        push(second);
        push(third);
        return perm;
    };

    Term ap = permuted(a, perm_for(a, batch, keep_a, sum));
    Term bp = permuted(b, perm_for(b, batch, keep_b, sum));

    auto extent_of = [](const Term& t, std::size_t from, std::size_t count) {
        std::size_t e = 1;
        for (std::size_t k = from; k < from + count; ++k) e *= t.extents[k];
        return e;
    };
    const std::size_t nb = extent_of(ap, 0, batch.size());
    const std::size_t na = extent_of(ap, batch.size(), keep_a.size());
    const std::size_t ns = extent_of(ap, batch.size() + keep_a.size(), sum.size());
    const std::size_t nbk = extent_of(bp, batch.size(), keep_b.size());
    if (nb != extent_of(bp, 0, batch.size()) ||
        ns != extent_of(bp, batch.size() + keep_b.size(), sum.size()))
        throw ContractionError("internal extent mismatch in pairwise contraction");

    Term out;
    out.labels = batch;
    out.labels.insert(out.labels.end(), keep_a.begin(), keep_a.end());
    out.labels.insert(out.labels.end(), keep_b.begin(), keep_b.end());
    out.extents.reserve(out.labels.size());
    for (std::size_t k = 0; k < batch.size() + keep_a.size(); ++k)
        out.extents.push_back(ap.extents[k]);
    for (std::size_t k = batch.size(); k < batch.size() + keep_b.size(); ++k)
        out.extents.push_back(bp.extents[k]);
    out.data.assign(nb * na * nbk, 0.0);

    for (std::size_t ib = 0; ib < nb; ++ib) {
        const double* abase = ap.data.data() + ib * na * ns;
        const double* bbase = bp.data.data() + ib * nbk * ns;
        double* cbase = out.data.data() + ib * na * nbk;
        for (std::size_t i = 0; i < na; ++i) {
            const double* arow = abase + i * ns;
            for (std::size_t j = 0; j < nbk; ++j) {
                const double* brow = bbase + j * ns;
                double acc = 0.0;
                for (std::size_t k = 0; k < ns; ++k) acc += arow[k] * brow[k];
                cbase[i * nbk + j] = acc;
            }
        }
    }
    return out;
}

}  // namespace detail

/// Evaluates a contraction expression over the operands. The batch marker binds
/// each marked operand's flattened batch extent; batch extents must agree. The
/// result is exact multilinear contraction up to floating-point reassociation;
/// fixed_lr pins the association order.
inline DenseTensor contract(const EinsumExpr& expr, const std::vector<DenseTensor>& operands,
                            ContractOrder order = ContractOrder::greedy) {
    const auto parsed = detail::parse_expr(expr.text);
    if (parsed.inputs.size() != operands.size())
        throw ContractionError("expression has " + std::to_string(parsed.inputs.size()) +
                               " operands, got " + std::to_string(operands.size()));
    if (expr.operand_count != 0 && expr.operand_count != operands.size())
        throw ContractionError("operand_count disagrees with supplied operands");

    // Bind labels and check extent consistency.
    std::vector<detail::Term> terms;
    std::vector<std::size_t> label_extent(63, 0);  // index 62 = batch
    auto bind_extent = [&](int label, std::size_t extent) {
        std::size_t& slot = label_extent[label < 0 ? 62 : static_cast<std::size_t>(label)];
        if (slot == 0)
            slot = extent;
        else if (slot != extent)
            throw ContractionError("inconsistent extent for a subscript");
    };
    for (std::size_t t = 0; t < operands.size(); ++t) {
        const auto& op = operands[t];
        const auto& subs = parsed.inputs[t];
        if (op.shape.rank() != subs.size())
            throw ContractionError("operand " + std::to_string(t) + " has " +
                                   std::to_string(op.shape.rank()) + " axes, expression wants " +
                                   std::to_string(subs.size()));
        if (!parsed.input_ellipsis[t] && op.batch != 1)
            throw ContractionError("operand " + std::to_string(t) +
                                   " carries a batch extent but no ellipsis");
        detail::Term term;
        if (parsed.input_ellipsis[t]) {
            term.labels.push_back(-1);
            term.extents.push_back(op.batch);
            bind_extent(-1, op.batch);
        }
        for (std::size_t k = 0; k < subs.size(); ++k) {
            const int label = subscript_index(subs[k]);
            term.labels.push_back(label);
            term.extents.push_back(op.shape.dims[k]);
            bind_extent(label, op.shape.dims[k]);
        }
        term.data = op.data;
        terms.push_back(std::move(term));
    }

    std::vector<int> out_labels;
    if (parsed.output_ellipsis) out_labels.push_back(-1);
    for (char c : parsed.output) {
        const int label = subscript_index(c);
        if (label_extent[label] == 0)
            throw ContractionError(std::string("output subscript '") + c +
                                   "' does not appear in any input");
        out_labels.push_back(label);
    }

    auto needed_for = [&](std::size_t skip_i, std::size_t skip_j) {
        std::set<int> needed(out_labels.begin(), out_labels.end());
        for (std::size_t t = 0; t < terms.size(); ++t) {
            if (t == skip_i || t == skip_j) continue;
            needed.insert(terms[t].labels.begin(), terms[t].labels.end());
        }
        return needed;
    };

    while (terms.size() > 1) {
        std::size_t pi = 0, pj = 1;
        if (order == ContractOrder::greedy && terms.size() > 2) {
            std::size_t best = std::numeric_limits<std::size_t>::max();
            for (std::size_t i = 0; i < terms.size(); ++i) {
                for (std::size_t j = i + 1; j < terms.size(); ++j) {
                    // Survivors of the pair are exactly its needed-later labels.
                    const auto needed = needed_for(i, j);
                    std::size_t result = 1;
                    std::set<int> seen;
                    auto count = [&](const detail::Term& t) {
                        for (std::size_t k = 0; k < t.labels.size(); ++k) {
                            const int l = t.labels[k];
                            if (!needed.count(l) || seen.count(l)) continue;
                            result *= t.extents[k];
                            seen.insert(l);
                        }
                    };
                    count(terms[i]);
                    count(terms[j]);
                    if (result < best) {
                        best = result;
                        pi = i;
                        pj = j;
                    }
                }
            }
        }
        auto needed = needed_for(pi, pj);
        detail::Term merged = detail::contract_pair(terms[pi], terms[pj], needed);
        terms.erase(terms.begin() + static_cast<std::ptrdiff_t>(pj));
        terms[pi] = std::move(merged);
    }

    detail::Term result = detail::reduce_term(terms[0], [&](int l) {
        return std::find(out_labels.begin(), out_labels.end(), l) != out_labels.end();
    });

    std::vector<std::size_t> perm;
    for (int l : out_labels) {
        const auto it = std::find(result.labels.begin(), result.labels.end(), l);
        if (it == result.labels.end())
            throw ContractionError("internal: output label lost during contraction");
        perm.push_back(static_cast<std::size_t>(it - result.labels.begin()));
    }
    result = detail::permuted(result, perm);

    std::size_t batch = 1;
    std::vector<std::size_t> dims;
    for (std::size_t k = 0; k < result.labels.size(); ++k) {
        if (result.labels[k] == -1)
            batch = result.extents[k];
        else
            dims.push_back(result.extents[k]);
    }
    if (dims.empty()) dims.push_back(1);
    return DenseTensor(batch, AxisShape(std::move(dims)), std::move(result.data));
}

}  // namespace quanta
