#include "kstep/mhs.hpp"

#include <algorithm>
#include <string>

#include <boost/dynamic_bitset.hpp>

namespace kstep {

namespace {

using Bits = boost::dynamic_bitset<>;

class HittingSetSearch {
public:
    HittingSetSearch(const std::vector<ElementSet>& family, std::size_t universe)
        : universe_(universe)
    {
        for (const auto& member : family) {
            Bits b(universe);
            for (std::size_t e : member) {
                b.set(e);
            }
            members_.push_back(std::move(b));
        }
    }

    ElementSet run(std::size_t& nodes)
    {
        best_ = greedy();
        Bits chosen(universe_);
        Bits banned(universe_);
        search(chosen, banned, 0);
        nodes = nodes_;
        ElementSet out;
        for (std::size_t e = best_.find_first(); e != Bits::npos; e = best_.find_next(e)) {
            out.push_back(e);
        }
        return out;
    }

private:
    std::vector<std::size_t> unhit(const Bits& chosen) const
    {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < members_.size(); ++i) {
            if (!members_[i].intersects(chosen)) {
                out.push_back(i);
            }
        }
        return out;
    }

    std::vector<std::size_t> frequencies(const std::vector<std::size_t>& open, const Bits& banned) const
    {
        std::vector<std::size_t> freq(universe_, 0);
        for (std::size_t i : open) {
            const Bits& b = members_[i];
            for (std::size_t e = b.find_first(); e != Bits::npos; e = b.find_next(e)) {
                if (!banned.test(e)) {
                    ++freq[e];
                }
            }
        }
        return freq;
    }

    Bits greedy() const
    {
        Bits chosen(universe_);
        Bits none(universe_);
        while (true) {
            auto open = unhit(chosen);
            if (open.empty()) {
                return chosen;
            }
            auto freq = frequencies(open, none);
            auto best = std::max_element(freq.begin(), freq.end());
            chosen.set(static_cast<std::size_t>(best - freq.begin()));
        }
    }

    // Members pairwise disjoint from each other need one element each.
    std::size_t disjoint_bound(const std::vector<std::size_t>& open, const Bits& banned) const
    {
        std::vector<std::size_t> order = open;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return (members_[a] - banned).count() < (members_[b] - banned).count();
        });
        Bits used(universe_);
        std::size_t bound = 0;
        for (std::size_t i : order) {
            Bits avail = members_[i] - banned;
            if (!avail.intersects(used)) {
                used |= avail;
                ++bound;
            }
        }
        return bound;
    }

    void search(Bits& chosen, Bits banned, std::size_t size)
    {
        ++nodes_;
        auto open = unhit(chosen);
        if (open.empty()) {
            if (size < best_.count()) {
                best_ = chosen;
            }
            return;
        }
        if (size + disjoint_bound(open, banned) >= best_.count()) {
            return;
        }
        std::size_t pick = open.front();
        std::size_t pick_size = universe_ + 1;
        for (std::size_t i : open) {
            std::size_t n = (members_[i] - banned).count();
            if (n == 0) {
                return;
            }
            if (n < pick_size) {
                pick = i;
                pick_size = n;
            }
        }
        auto freq = frequencies(open, banned);
        std::vector<std::size_t> elements;
        Bits avail = members_[pick] - banned;
        for (std::size_t e = avail.find_first(); e != Bits::npos; e = avail.find_next(e)) {
            elements.push_back(e);
        }
        std::stable_sort(elements.begin(), elements.end(),
                         [&](std::size_t a, std::size_t b) { return freq[a] > freq[b]; });
        for (std::size_t e : elements) {
            chosen.set(e);
            search(chosen, banned, size + 1);
            chosen.reset(e);
            // Later branches never take e: every set containing it was covered.
            banned.set(e);
        }
    }

    std::size_t universe_;
    std::vector<Bits> members_;
    Bits best_;
    std::size_t nodes_ = 0;
};

}  // namespace

ElementSet minimum_hitting_set(const std::vector<ElementSet>& family, std::size_t universe,
                               HittingSetStats* stats)
{
    for (std::size_t i = 0; i < family.size(); ++i) {
        if (family[i].empty()) {
            throw std::invalid_argument("hitting set family member " + std::to_string(i) +
                                        " is empty");
        }
        for (std::size_t e : family[i]) {
            if (e >= universe) {
                throw std::invalid_argument("hitting set element " + std::to_string(e) +
                                            " outside the universe");
            }
        }
    }
    HittingSetSearch search(family, universe);
    std::size_t nodes = 0;
    ElementSet out = search.run(nodes);
    if (stats) {
        stats->nodes = nodes;
    }
    return out;
}

bool hits_all(const ElementSet& candidate, const std::vector<ElementSet>& family)
{
    return std::all_of(family.begin(), family.end(), [&](const ElementSet& member) {
        return std::any_of(member.begin(), member.end(), [&](std::size_t e) {
            return std::binary_search(candidate.begin(), candidate.end(), e);
        });
    });
}

}  // namespace kstep
