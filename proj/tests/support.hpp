#pragma once

#include "kstep/model.hpp"
#include "kstep/query.hpp"

#include <random>

namespace kstep::testing {

inline Rational small_rational(std::mt19937_64& rng, int lo = -4, int hi = 4, int den = 2)
{
    std::uniform_int_distribution<int> num(lo * den, hi * den);
    return make_rational(num(rng), den);
}

inline std::shared_ptr<const Network> random_net(std::mt19937_64& rng,
                                                 const std::vector<std::size_t>& widths)
{
    std::vector<Layer> layers;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        Layer layer;
        layer.relu = l + 2 < widths.size();
        for (std::size_t r = 0; r < widths[l + 1]; ++r) {
            RationalVector row;
            for (std::size_t c = 0; c < widths[l]; ++c) {
                row.push_back(small_rational(rng));
            }
            layer.weights.push_back(std::move(row));
            layer.bias.push_back(small_rational(rng));
        }
        layers.push_back(std::move(layer));
    }
    return std::make_shared<const Network>(std::move(layers));
}

/// Calls visit(point) for every point of a product of finite domains.
template <class Visit>
void for_each_point(const std::vector<FeatureDomain>& domains, Visit&& visit)
{
    std::vector<std::size_t> idx(domains.size(), 0);
    RationalVector point(domains.size());
    while (true) {
        for (std::size_t i = 0; i < domains.size(); ++i) {
            point[i] = domains[i].values()[idx[i]];
        }
        visit(point);
        std::size_t i = domains.size();
        while (i > 0) {
            --i;
            if (++idx[i] < domains[i].values().size()) {
                break;
            }
            idx[i] = 0;
            if (i == 0) {
                return;
            }
        }
        if (domains.empty()) {
            return;
        }
    }
}

inline FeatureDomain binary() { return FeatureDomain::finite({Rational(0), Rational(1)}); }

}  // namespace kstep::testing
