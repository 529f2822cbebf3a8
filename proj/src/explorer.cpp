#include "lockreach/explorer.hpp"

#include <deque>
#include <unordered_map>

#include "lockreach/errors.hpp"

namespace lockreach {

namespace {

bool within_bounds(const System& sys, const SystemConfig& c, const Bounds& b) {
    for (const auto& t : c.threads) {
        if (t.stack.size() > b.max_stack_depth) return false;
        if (sys.reentrant())
            for (auto n : t.counts)
                if (n > b.max_count) return false;
    }
    return true;
}

}  // namespace

ReachResult bounded_reach(const System& sys, const PairQuery& query, const Bounds& bounds) {
    const auto qa = sys.thread(query.thread_a).state_id(query.state_a);
    const auto qb = sys.thread(query.thread_b).state_id(query.state_b);
    if (!qa || !qb) throw InputError("query names a state unknown to its thread");

    auto matches = [&](const SystemConfig& c) {
        return c.threads[query.thread_a].state == *qa && c.threads[query.thread_b].state == *qb;
    };

    ReachResult res;
    std::unordered_map<SystemConfig, std::uint32_t, SystemConfigHash> visited;
    std::vector<SystemConfig> configs;
    std::vector<std::uint32_t> parent;
    std::vector<Label> via;
    std::deque<std::uint32_t> queue;

    auto intern = [&](SystemConfig c, std::uint32_t from, Label label) -> std::uint32_t {
        auto [it, fresh] = visited.emplace(std::move(c), static_cast<std::uint32_t>(configs.size()));
        if (!fresh) return it->second;
        configs.push_back(it->first);
        parent.push_back(from);
        via.push_back(label);
        queue.push_back(it->second);
        return it->second;
    };

    constexpr std::uint32_t kNoParent = ~std::uint32_t{0};
    intern(sys.initial_config(), kNoParent, Label{});

    std::optional<std::uint32_t> goal;
    while (!queue.empty()) {
        if (res.expanded >= bounds.max_steps) {
            res.stopped_by_steps = true;
            break;
        }
        std::uint32_t id = queue.front();
        queue.pop_front();
        ++res.expanded;
        if (matches(configs[id])) {
            goal = id;
            break;
        }
        for (auto& [label, next] : sys.successors(configs[id])) {
            if (!within_bounds(sys, next, bounds)) {
                res.pruned_by_bounds = true;
                continue;
            }
            intern(std::move(next), id, label);
        }
    }
    res.visited = visited.size();

    if (goal) {
        std::vector<Label> labels;
        for (std::uint32_t at = *goal; parent[at] != kNoParent; at = parent[at])
            labels.push_back(via[at]);
        std::reverse(labels.begin(), labels.end());
        res.witness = sys.replay(labels);
        internal_check(matches(res.witness->final_config()), "witness does not reach the query");
        res.status = ReachResult::Status::Found;
    } else if (!res.pruned_by_bounds && !res.stopped_by_steps) {
        res.status = ReachResult::Status::NotFoundExhausted;
    } else {
        res.status = ReachResult::Status::NotFoundTruncated;
    }
    return res;
}

void enumerate_traces(const System& sys, std::size_t max_len,
                      const std::function<bool(const Computation&)>& visit) {
    Computation comp;
    comp.start = sys.initial_config();
    // Iterative depth-first walk; emits each prefix (pre-order), so traces
    // appear in canonical lexicographic order and each exactly once.
    struct Frame {
        std::vector<std::pair<Label, SystemConfig>> succ;
        std::size_t next = 0;
    };
    if (!visit(comp)) return;
    if (max_len == 0) return;
    std::vector<Frame> stack;
    stack.push_back(Frame{sys.successors(comp.start), 0});
    while (!stack.empty()) {
        Frame& top = stack.back();
        if (top.next >= top.succ.size()) {
            stack.pop_back();
            if (!comp.steps.empty()) comp.steps.pop_back();
            continue;
        }
        auto& [label, next] = top.succ[top.next++];
        comp.steps.push_back(Step{label, next});
        if (!visit(comp)) return;
        if (comp.steps.size() < max_len)
            stack.push_back(Frame{sys.successors(next), 0});
        else
            comp.steps.pop_back();
    }
}

bool explore_configs(const System& sys, const Bounds& bounds,
                     const std::function<void(const SystemConfig&)>& visit) {
    std::unordered_map<SystemConfig, std::uint32_t, SystemConfigHash> visited;
    std::deque<SystemConfig> queue;
    bool complete = true;
    std::size_t expanded = 0;

    auto push = [&](SystemConfig c) {
        if (!within_bounds(sys, c, bounds)) {
            complete = false;
            return;
        }
        auto [it, fresh] = visited.emplace(std::move(c), 0);
        if (fresh) queue.push_back(it->first);
    };
    push(sys.initial_config());
    while (!queue.empty()) {
        if (expanded >= bounds.max_steps) {
            complete = false;
            break;
        }
        SystemConfig c = std::move(queue.front());
        queue.pop_front();
        ++expanded;
        visit(c);
        for (auto& [label, next] : sys.successors(c)) push(std::move(next));
    }
    return complete;
}

}  // namespace lockreach
