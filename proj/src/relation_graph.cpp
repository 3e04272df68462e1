#include "stance/relation_graph.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "stance/error.hpp"

namespace stance {

RelationGraph build_graph(const Dataset& ds) {
    RelationGraph g;
    g.n_sentences = ds.store ? ds.store->size() : 0;

    std::set<IdPair> agree, disagree;
    for (const auto& pr : ds.pairs) {
        if (!pr.label)
            throw DataError("unlabeled row '" + pr.row_id + "' in relation-graph input");
        if (pr.premise == pr.hypothesis) {
            ++g.self_pairs_dropped;
            continue;
        }
        switch (*pr.label) {
            case Label::Agreed: agree.insert(ordered_pair(pr.premise, pr.hypothesis)); break;
            case Label::Disagreed: disagree.insert(ordered_pair(pr.premise, pr.hypothesis)); break;
            case Label::Unrelated: break;
        }
    }
    g.agree_edges.assign(agree.begin(), agree.end());
    g.disagree_edges.assign(disagree.begin(), disagree.end());
    return g;
}

namespace {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
        std::iota(parent_.begin(), parent_.end(), SentenceId{0});
    }

    SentenceId find(SentenceId x) {
        SentenceId root = x;
        while (parent_[root] != root) root = parent_[root];
        while (parent_[x] != root) {
            SentenceId next = parent_[x];
            parent_[x] = root;
            x = next;
        }
        return root;
    }

    void unite(SentenceId a, SentenceId b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
    }

private:
    std::vector<SentenceId> parent_;
    std::vector<std::uint32_t> rank_;
};

}  // namespace

AgreementPartition::AgreementPartition(const RelationGraph& g) {
    UnionFind uf(g.n_sentences);
    for (const auto& [a, b] : g.agree_edges) uf.unite(a, b);

    // Canonicalize: the representative of a class is its smallest member.
    const auto n = static_cast<SentenceId>(g.n_sentences);
    std::unordered_map<SentenceId, SentenceId> min_of_root;
    min_of_root.reserve(g.n_sentences);
    for (SentenceId i = 0; i < n; ++i) {
        const SentenceId root = uf.find(i);
        auto [it, inserted] = min_of_root.try_emplace(root, i);
        if (!inserted && i < it->second) it->second = i;
    }
    rep_.resize(g.n_sentences);
    for (SentenceId i = 0; i < n; ++i) {
        rep_[i] = min_of_root[uf.find(i)];
        members_[rep_[i]].push_back(i);
    }
}

std::vector<SentenceId> AgreementPartition::representatives() const {
    std::vector<SentenceId> out;
    out.reserve(members_.size());
    for (const auto& [rep, _] : members_) out.push_back(rep);
    return out;
}

DisagreementRelation::DisagreementRelation(std::vector<IdPair> rep_pairs)
    : pairs_(std::move(rep_pairs)) {
    std::sort(pairs_.begin(), pairs_.end());
    pairs_.erase(std::unique(pairs_.begin(), pairs_.end()), pairs_.end());
}

bool DisagreementRelation::related(SentenceId rep_a, SentenceId rep_b) const {
    return std::binary_search(pairs_.begin(), pairs_.end(), ordered_pair(rep_a, rep_b));
}

std::pair<DisagreementRelation, std::vector<Conflict>> disagreement_relation(
    const RelationGraph& g, const AgreementPartition& p) {
    std::vector<IdPair> rel;
    std::vector<Conflict> conflicts;
    for (const auto& edge : g.disagree_edges) {
        const SentenceId ra = p.class_of(edge.first);
        const SentenceId rb = p.class_of(edge.second);
        if (ra == rb)
            conflicts.push_back(Conflict{edge, ra});
        else
            rel.push_back(ordered_pair(ra, rb));
    }
    return {DisagreementRelation(std::move(rel)), std::move(conflicts)};
}

std::vector<Conflict> detect_conflicts(const RelationGraph& g) {
    AgreementPartition p(g);
    return disagreement_relation(g, p).second;
}

std::optional<Label> derive_label(const AgreementPartition& p, const DisagreementRelation& d,
                                  SentenceId a, SentenceId b) {
    if (a == b) return Label::Agreed;
    const SentenceId ra = p.class_of(a);
    const SentenceId rb = p.class_of(b);
    if (ra == rb) return Label::Agreed;
    if (d.related(ra, rb)) return Label::Disagreed;
    return std::nullopt;
}

std::size_t closure_size(const RelationGraph& g) {
    AgreementPartition p(g);
    auto [rel, conflicts] = disagreement_relation(g, p);

    std::size_t count = 0;
    for (SentenceId rep : p.representatives()) {
        const std::size_t s = p.members(rep).size();
        count += s * (s - 1) / 2;
    }
    for (const auto& [ra, rb] : rel.pairs())
        count += p.members(ra).size() * p.members(rb).size();
    return count;
}

std::vector<ClosurePair> enumerate_closure(const RelationGraph& g, std::size_t cap) {
    AgreementPartition p(g);
    auto [rel, conflicts] = disagreement_relation(g, p);

    std::size_t count = 0;
    for (SentenceId rep : p.representatives()) {
        const std::size_t s = p.members(rep).size();
        count += s * (s - 1) / 2;
    }
    for (const auto& [ra, rb] : rel.pairs())
        count += p.members(ra).size() * p.members(rb).size();
    if (count > cap)
        throw DataError("closure would contain " + std::to_string(count) +
                        " pairs, above the cap of " + std::to_string(cap));

    std::vector<ClosurePair> out;
    out.reserve(count);
    for (SentenceId rep : p.representatives()) {
        const auto& m = p.members(rep);
        for (std::size_t i = 0; i < m.size(); ++i)
            for (std::size_t j = i + 1; j < m.size(); ++j)
                out.push_back(ClosurePair{m[i], m[j], Label::Agreed});
    }
    for (const auto& [ra, rb] : rel.pairs())
        for (SentenceId u : p.members(ra))
            for (SentenceId v : p.members(rb)) {
                auto [x, y] = ordered_pair(u, v);
                out.push_back(ClosurePair{x, y, Label::Disagreed});
            }
    std::sort(out.begin(), out.end(), [](const ClosurePair& l, const ClosurePair& r) {
        return std::tie(l.a, l.b) < std::tie(r.a, r.b);
    });
    return out;
}

std::optional<double> AuditReport::positive_rate() const {
    if (positive_triples == 0) return std::nullopt;
    return static_cast<double>(positive_held) / static_cast<double>(positive_triples);
}

std::optional<double> AuditReport::negative_rate() const {
    if (negative_triples == 0) return std::nullopt;
    return static_cast<double>(negative_held) / static_cast<double>(negative_triples);
}

namespace {

constexpr std::uint8_t kAgreedBit = 1;
constexpr std::uint8_t kDisagreedBit = 2;
constexpr std::uint8_t kUnrelatedBit = 4;

std::uint64_t pair_key(SentenceId a, SentenceId b) {
    auto [x, y] = ordered_pair(a, b);
    return (std::uint64_t(x) << 32) | y;
}

}  // namespace

AuditReport audit_consistency(const Dataset& ds) {
    // Direct labels per unordered pair. Contradictory duplicate rows leave
    // several bits set; a rule instance is held when the required label is
    // among them.
    std::unordered_map<std::uint64_t, std::uint8_t> labels;
    std::size_t n_sentences = ds.store ? ds.store->size() : 0;
    std::vector<std::vector<SentenceId>> agree_nbrs(n_sentences), dis_nbrs(n_sentences);

    for (const auto& pr : ds.pairs) {
        if (!pr.label) throw DataError("unlabeled row '" + pr.row_id + "' in audit input");
        if (pr.premise == pr.hypothesis) continue;
        std::uint8_t bit = 0;
        switch (*pr.label) {
            case Label::Agreed: bit = kAgreedBit; break;
            case Label::Disagreed: bit = kDisagreedBit; break;
            case Label::Unrelated: bit = kUnrelatedBit; break;
        }
        std::uint8_t& mask = labels[pair_key(pr.premise, pr.hypothesis)];
        const std::uint8_t before = mask;
        mask |= bit;
        if (bit == kAgreedBit && !(before & kAgreedBit)) {
            agree_nbrs[pr.premise].push_back(pr.hypothesis);
            agree_nbrs[pr.hypothesis].push_back(pr.premise);
        }
        if (bit == kDisagreedBit && !(before & kDisagreedBit)) {
            dis_nbrs[pr.premise].push_back(pr.hypothesis);
            dis_nbrs[pr.hypothesis].push_back(pr.premise);
        }
    }

    AuditReport report;
    for (SentenceId b = 0; b < n_sentences; ++b) {
        auto& agr = agree_nbrs[b];
        std::sort(agr.begin(), agr.end());

        for (std::size_t i = 0; i < agr.size(); ++i)
            for (std::size_t j = i + 1; j < agr.size(); ++j) {
                auto it = labels.find(pair_key(agr[i], agr[j]));
                if (it == labels.end()) continue;
                ++report.positive_triples;
                if (it->second & kAgreedBit) ++report.positive_held;
            }

        if (dis_nbrs[b].empty() || agr.empty()) continue;
        std::set<IdPair> counted;
        for (SentenceId a : dis_nbrs[b])
            for (SentenceId c : agr) {
                if (a == c) continue;
                auto it = labels.find(pair_key(a, c));
                if (it == labels.end()) continue;
                if (!counted.insert(ordered_pair(a, c)).second) continue;
                ++report.negative_triples;
                if (it->second & kDisagreedBit) ++report.negative_held;
            }
    }
    return report;
}

std::string audit_report_json(const AuditReport& report, const std::vector<Conflict>& conflicts,
                              const SentenceStore* store) {
    nlohmann::ordered_json j;
    j["positive_triples"] = report.positive_triples;
    j["positive_held"] = report.positive_held;
    if (auto r = report.positive_rate()) j["positive_rate"] = *r;
    j["negative_triples"] = report.negative_triples;
    j["negative_held"] = report.negative_held;
    if (auto r = report.negative_rate()) j["negative_rate"] = *r;

    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& c : conflicts) {
        nlohmann::ordered_json item;
        item["witness"] = {c.witness_edge.first, c.witness_edge.second};
        item["class_rep"] = c.class_rep;
        if (store) {
            item["witness_texts"] = {store->text(c.witness_edge.first),
                                     store->text(c.witness_edge.second)};
        }
        list.push_back(std::move(item));
    }
    j["conflicts"] = std::move(list);
    return j.dump(2) + "\n";
}

}  // namespace stance
