#include "lockreach/saturation.hpp"

#include <algorithm>
#include <deque>

#include "lockreach/errors.hpp"

namespace lockreach {
namespace sat {

namespace {

std::uint64_t pack_pair(std::uint32_t a, std::uint32_t b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace

PostStar::PostStar(ControlId initial_control, RuleProvider provider)
    : provider_(std::move(provider)), initial_control_(initial_control) {
    aux_flag_.push_back(false);  // final sink
    out_.emplace_back();
    eps_in_.emplace_back();
}

PostStar::AutState PostStar::control_aut(ControlId c) {
    auto [it, fresh] = control_state_.emplace(c, next_state_);
    if (fresh) {
        ++next_state_;
        aux_flag_.push_back(false);
        out_.emplace_back();
        eps_in_.emplace_back();
        if (aut_owner_.size() < next_state_) aut_owner_.resize(next_state_, 0);
        aut_owner_[it->second] = c;
    }
    return it->second;
}

PostStar::AutState PostStar::aux_aut(ControlId c, Sym s) {
    auto [it, fresh] = aux_state_.emplace(pack_pair(c, s), next_state_);
    if (fresh) {
        ++next_state_;
        aux_flag_.push_back(true);
        out_.emplace_back();
        eps_in_.emplace_back();
    }
    return it->second;
}

void PostStar::add(AutState from, Sym label, AutState to, Prov prov) {
    internal_check(to != from || label != kEps, "self eps edge");
    // Dedup on (from, label, to); first writer keeps its provenance.
    std::uint64_t k1 = pack_pair(from, to);
    auto [it, fresh] = trans_index_.emplace(k1 * 0x1f123bb5ULL + label, kNone);
    if (!fresh) {
        // Hash key may collide only if (from,label,to) collide as packed; the
        // packing is injective for from,to < 2^32 and label folded in, so a
        // second lookup confirms identity.
        std::uint32_t id = it->second;
        if (trans_[id].from == from && trans_[id].label == label && trans_[id].to == to) return;
        // Fold collision: fall back to a linear probe over the out list.
        for (auto tid : out_[from]) {
            const Trans& t = trans_[tid];
            if (t.from == from && t.label == label && t.to == to) return;
        }
    }
    std::uint32_t id = static_cast<std::uint32_t>(trans_.size());
    if (fresh) it->second = id;
    trans_.push_back(Trans{from, label, to, prov});
    out_[from].push_back(id);
    if (label == kEps) eps_in_[to].push_back(id);
    worklist_.push_back(id);
}

void PostStar::run(std::size_t max_transitions) {
    internal_check(!ran_, "PostStar::run called twice");
    ran_ = true;
    add(control_aut(initial_control_), kBottom, kFinal, Prov{});

    std::size_t cursor = 0;
    while (cursor < worklist_.size()) {
        internal_check(trans_.size() <= max_transitions, "saturation transition budget exceeded");
        std::uint32_t tid = worklist_[cursor++];
        const Trans t = trans_[tid];  // copy: trans_ may reallocate below

        bool from_control = !aux_flag_[t.from] && t.from != kFinal;
        if (from_control) {
            ControlId c = aut_owner_[t.from];
            if (t.label != kEps) {
                const ControlRules& rules = provider_(c);
                for (const auto& r : rules.internals)
                    add(control_aut(r.target), t.label, t.to,
                        Prov{Prov::Kind::Step, tid, kNone, r.tag});
                for (const auto& r : rules.pushes) {
                    AutState aux = aux_aut(r.target, r.symbol);
                    AutState head = control_aut(r.target);
                    add(head, r.symbol, aux, Prov{Prov::Kind::PushHead, tid, kNone, r.tag});
                    add(aux, t.label, t.to, Prov{Prov::Kind::PushTail, tid, kNone, r.tag});
                }
                if (t.label != kBottom)
                    for (const auto& r : rules.pops)
                        if (r.symbol == t.label)
                            add(control_aut(r.target), kEps, t.to,
                                Prov{Prov::Kind::Step, tid, kNone, r.tag});
            } else {
                // eps elimination, forward direction: eps edge meets the
                // current out-edges of its target.
                for (std::size_t i = 0; i < out_[t.to].size(); ++i) {
                    std::uint32_t eid = out_[t.to][i];
                    const Trans e = trans_[eid];
                    internal_check(e.label != kEps, "eps edge out of a non-control state");
                    add(t.from, e.label, e.to, Prov{Prov::Kind::Eps, tid, eid, 0});
                }
            }
        }
        if (t.label != kEps) {
            // eps elimination, backward direction: new non-eps edge meets the
            // eps edges already pointing at its source.
            for (std::size_t i = 0; i < eps_in_[t.from].size(); ++i) {
                std::uint32_t eid = eps_in_[t.from][i];
                const Trans e = trans_[eid];
                add(e.from, t.label, t.to, Prov{Prov::Kind::Eps, eid, tid, 0});
            }
        }
    }
}

bool PostStar::control_reachable(ControlId c) const {
    auto it = control_state_.find(c);
    if (it == control_state_.end()) return false;
    // Every transition target can continue to the final sink, so one
    // outgoing edge is an accepting path.
    return !out_[it->second].empty();
}

std::vector<ControlId> PostStar::reachable_controls() const {
    std::vector<ControlId> out;
    for (const auto& [c, s] : control_state_)
        if (!out_[s].empty()) out.push_back(c);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Sym> PostStar::out_labels(ControlId c) const {
    std::vector<Sym> labels;
    auto it = control_state_.find(c);
    if (it == control_state_.end()) return labels;
    for (auto tid : out_[it->second]) {
        Sym s = trans_[tid].label;
        if (s != kEps) labels.push_back(s);
    }
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    return labels;
}

bool PostStar::accepts(ControlId control, std::span<const Sym> stack) const {
    auto it = control_state_.find(control);
    if (it == control_state_.end()) return false;
    std::vector<Sym> word(stack.rbegin(), stack.rend());
    word.push_back(kBottom);
    // DFS over non-eps edges (the saturation closes over eps).
    std::vector<std::pair<AutState, std::size_t>> todo = {{it->second, 0}};
    while (!todo.empty()) {
        auto [at, pos] = todo.back();
        todo.pop_back();
        if (pos == word.size()) {
            if (at == kFinal) return true;
            continue;
        }
        for (auto tid : out_[at]) {
            const Trans& t = trans_[tid];
            if (t.label == word[pos]) todo.emplace_back(t.to, pos + 1);
        }
    }
    return false;
}

std::optional<std::vector<std::uint32_t>> PostStar::shortest_path_to_final(AutState from) const {
    if (from == kFinal) return std::vector<std::uint32_t>{};
    std::vector<std::uint32_t> via(aux_flag_.size(), kNone);
    std::vector<bool> seen(aux_flag_.size(), false);
    std::deque<AutState> queue;
    seen[from] = true;
    queue.push_back(from);
    while (!queue.empty()) {
        AutState at = queue.front();
        queue.pop_front();
        for (auto tid : out_[at]) {
            const Trans& t = trans_[tid];
            if (t.label == kEps || seen[t.to]) continue;
            seen[t.to] = true;
            via[t.to] = tid;
            if (t.to == kFinal) {
                std::vector<std::uint32_t> path;
                for (AutState s = kFinal; s != from;) {
                    path.push_back(via[s]);
                    s = trans_[via[s]].from;
                }
                std::reverse(path.begin(), path.end());
                return path;
            }
            queue.push_back(t.to);
        }
    }
    return std::nullopt;
}

std::vector<std::uint64_t> PostStar::reconstruct(std::vector<std::uint32_t> path) const {
    std::deque<std::uint32_t> p(path.begin(), path.end());
    std::vector<std::uint64_t> tags;
    std::size_t guard = 0;
    const std::size_t guard_max = 32 * (trans_.size() + 2) * (path.size() + 2) + 1024;
    while (true) {
        internal_check(++guard < guard_max, "witness reconstruction does not terminate");
        internal_check(!p.empty(), "witness reconstruction lost its path");
        const Trans& t1 = trans_[p.front()];
        switch (t1.prov.kind) {
            case Prov::Kind::Init:
                internal_check(p.size() == 1, "path continues past the initial edge");
                std::reverse(tags.begin(), tags.end());
                return tags;
            case Prov::Kind::Step:
                tags.push_back(t1.prov.tag);
                p.front() = t1.prov.premise;
                break;
            case Prov::Kind::PushHead: {
                internal_check(p.size() >= 2, "push head edge ends the path");
                const Trans& t2 = trans_[p[1]];
                internal_check(t2.prov.kind == Prov::Kind::PushTail && aux_flag_[t2.from],
                               "push head not followed by a tail edge");
                tags.push_back(t2.prov.tag);
                p.pop_front();
                p.front() = t2.prov.premise;
                break;
            }
            case Prov::Kind::PushTail:
                throw InternalError("tail edge at the head of a witness path");
            case Prov::Kind::Eps:
                p.front() = t1.prov.premise;
                p.insert(p.begin() + 1, t1.prov.premise2);
                break;
        }
    }
}

std::optional<std::vector<std::uint64_t>> PostStar::witness_tags(ControlId control) const {
    auto it = control_state_.find(control);
    if (it == control_state_.end()) return std::nullopt;
    auto path = shortest_path_to_final(it->second);
    if (!path) return std::nullopt;
    return reconstruct(std::move(*path));
}

std::optional<std::vector<std::uint64_t>> PostStar::witness_tags_with_top(ControlId control,
                                                                          Sym top) const {
    auto it = control_state_.find(control);
    if (it == control_state_.end()) return std::nullopt;
    std::optional<std::vector<std::uint32_t>> best;
    for (auto tid : out_[it->second]) {
        const Trans& t = trans_[tid];
        if (t.label != top) continue;
        auto rest = shortest_path_to_final(t.to);
        if (!rest) continue;
        rest->insert(rest->begin(), tid);
        if (!best || rest->size() < best->size()) best = std::move(rest);
    }
    if (!best) return std::nullopt;
    return reconstruct(std::move(*best));
}

}  // namespace sat
}  // namespace lockreach
