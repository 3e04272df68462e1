#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "stance/dataset.hpp"

namespace stance {

// Unordered sentence pair, always stored (min, max).
using IdPair = std::pair<SentenceId, SentenceId>;

inline IdPair ordered_pair(SentenceId a, SentenceId b) {
    return a < b ? IdPair{a, b} : IdPair{b, a};
}

// The labeled sentence graph: agreed rows contribute agree edges, disagreed
// rows disagree edges, unrelated rows nothing. Edge sets are deduplicated; a
// pair present in both sets reflects contradictory source rows and surfaces
// later as a conflict.
struct RelationGraph {
    std::size_t n_sentences = 0;
    std::vector<IdPair> agree_edges;     // sorted, unique
    std::vector<IdPair> disagree_edges;  // sorted, unique
    std::size_t self_pairs_dropped = 0;
};

// Requires every pair labeled; throws DataError otherwise. Self-pairs
// (premise == hypothesis after interning) are dropped and counted.
RelationGraph build_graph(const Dataset& ds);

// Connected components of the agree subgraph, i.e. the fixpoint of the
// positive rule. Built with union-find (parent + rank), then flattened; the
// representative of a class is its smallest member id, so class_of is
// idempotent and stable across runs.
class AgreementPartition {
public:
    explicit AgreementPartition(const RelationGraph& g);

    SentenceId class_of(SentenceId id) const { return rep_[id]; }
    bool same_class(SentenceId a, SentenceId b) const { return rep_[a] == rep_[b]; }
    std::size_t class_size(SentenceId id) const { return members_.at(rep_[id]).size(); }
    std::size_t n_sentences() const { return rep_.size(); }
    std::size_t n_classes() const { return members_.size(); }

    // Members of the class with this representative, ascending.
    const std::vector<SentenceId>& members(SentenceId rep) const { return members_.at(rep); }
    // All representatives, ascending.
    std::vector<SentenceId> representatives() const;

private:
    std::vector<SentenceId> rep_;
    std::map<SentenceId, std::vector<SentenceId>> members_;
};

// A disagree edge whose endpoints fell into one agreement class: the two
// transitivity rules cannot both hold on such data.
struct Conflict {
    IdPair witness_edge;
    SentenceId class_rep;
};

// Unordered pairs of class representatives linked by at least one disagree
// edge, i.e. the fixpoint of the negative rule over classes.
class DisagreementRelation {
public:
    DisagreementRelation() = default;
    explicit DisagreementRelation(std::vector<IdPair> rep_pairs);

    bool related(SentenceId rep_a, SentenceId rep_b) const;
    const std::vector<IdPair>& pairs() const { return pairs_; }

private:
    std::vector<IdPair> pairs_;  // sorted, unique, both members canonical reps
};

// Maps each disagree edge to its class pair; edges inside one class become
// Conflicts instead. Deterministic order (by witness edge).
std::pair<DisagreementRelation, std::vector<Conflict>> disagreement_relation(
    const RelationGraph& g, const AgreementPartition& p);

std::vector<Conflict> detect_conflicts(const RelationGraph& g);

// Transitive label for a sentence pair: Agreed for same-class (or identical)
// sentences, Disagreed across related classes, absent otherwise. Never
// Unrelated.
std::optional<Label> derive_label(const AgreementPartition& p, const DisagreementRelation& d,
                                  SentenceId a, SentenceId b);

struct ClosurePair {
    SentenceId a, b;  // a < b
    Label label;
};

// Number of pairs enumerate_closure would emit, without materializing them.
std::size_t closure_size(const RelationGraph& g);

// Every unordered pair with a derivable label: intra-class pairs (Agreed) and
// cross-class pairs of related classes (Disagreed), ordered by (a, b). Throws
// DataError when the count exceeds `cap`, reporting the count.
std::vector<ClosurePair> enumerate_closure(const RelationGraph& g,
                                           std::size_t cap = 100000000);

struct AuditReport {
    std::size_t positive_triples = 0;
    std::size_t positive_held = 0;
    std::size_t negative_triples = 0;
    std::size_t negative_held = 0;

    std::optional<double> positive_rate() const;
    std::optional<double> negative_rate() const;
};

// Counts rule instances over unordered triples {A,B,C} with pivot B.
// Positive: (A,B) and (B,C) agreed and (A,C) directly labeled; held iff
// (A,C) agreed. Negative: (A,B) disagreed, (B,C) agreed, (A,C) labeled; held
// iff (A,C) disagreed. Each (pivot, endpoint-pair) combination counts once.
// Requires every pair labeled.
AuditReport audit_consistency(const Dataset& ds);

// Fixed keys: positive_triples, positive_held, positive_rate, negative_triples,
// negative_held, negative_rate, conflicts[]. Undefined rates are omitted.
// When a store is given, conflict witnesses carry sentence texts.
std::string audit_report_json(const AuditReport& report, const std::vector<Conflict>& conflicts,
                              const SentenceStore* store = nullptr);

}  // namespace stance
