#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coefficient.hpp"
#include "error.hpp"

namespace gdarboux {

/// Z2 grading: 0 = even, 1 = odd.
struct Parity {
    int value = 0;

    constexpr Parity() = default;
    constexpr explicit Parity(int v) : value(((v % 2) + 2) % 2) {}
    static constexpr Parity even() { return Parity(0); }
    static constexpr Parity odd() { return Parity(1); }

    constexpr bool is_odd() const { return value == 1; }
    constexpr bool is_even() const { return value == 0; }
    friend constexpr Parity operator+(Parity a, Parity b) { return Parity(a.value + b.value); }
    friend constexpr bool operator==(Parity a, Parity b) { return a.value == b.value; }
    std::string str() const { return value ? "odd" : "even"; }
};

/// Exact rational weight of a homogeneous object.
using Weight = Rational;

/// Parity plus weight.
struct Degree {
    Parity parity;
    Weight weight;

    friend Degree operator+(const Degree& a, const Degree& b) {
        return {a.parity + b.parity, Weight(a.weight + b.weight)};
    }
    friend bool operator==(const Degree& a, const Degree& b) {
        return a.parity == b.parity && a.weight == b.weight;
    }
    std::string str() const { return "(" + parity.str() + ", " + weight.get_str() + ")"; }
};

struct CoordinateDecl {
    std::string name;
    Parity parity;
    Weight weight;
};

/// Closed sampling interval for one coordinate.
struct Interval {
    double lo = -1.0;
    double hi = 1.0;
};

/// Ordered homogeneous coordinate system. The order fixes the canonical
/// generator order of every expression over the chart.
class Chart {
public:
    explicit Chart(std::vector<CoordinateDecl> coords, std::vector<Interval> box = {})
        : coords_(std::move(coords)), box_(std::move(box)) {
        if (coords_.empty()) throw Error("a chart needs at least one coordinate");
        for (std::size_t i = 0; i < coords_.size(); ++i) {
            const auto& n = coords_[i].name;
            if (!valid_identifier(n)) throw Error("invalid coordinate name '" + n + "'");
            if (is_reserved(n)) throw Error("coordinate name '" + n + "' is reserved");
            for (std::size_t j = 0; j < i; ++j)
                if (coords_[j].name == n) throw Error("duplicate coordinate name '" + n + "'");
        }
        if (box_.empty()) box_.assign(coords_.size(), Interval{});
        if (box_.size() != coords_.size()) throw Error("sampling box size does not match chart dimension");
        for (const auto& b : box_)
            if (!(b.lo < b.hi)) throw Error("empty sampling interval");
    }

    std::size_t dim() const noexcept { return coords_.size(); }
    std::size_t even_dim() const {
        return static_cast<std::size_t>(std::count_if(coords_.begin(), coords_.end(),
                                                      [](const auto& c) { return c.parity.is_even(); }));
    }
    std::size_t odd_dim() const { return dim() - even_dim(); }
    bool purely_even() const { return odd_dim() == 0; }

    const std::vector<CoordinateDecl>& coords() const noexcept { return coords_; }
    const CoordinateDecl& coord(std::size_t i) const { return coords_.at(i); }
    Parity parity(std::size_t i) const { return coords_[i].parity; }
    const Weight& weight(std::size_t i) const { return coords_[i].weight; }
    const std::string& name(std::size_t i) const { return coords_[i].name; }
    const std::vector<Interval>& box() const noexcept { return box_; }

    std::optional<std::size_t> find(const std::string& name) const {
        for (std::size_t i = 0; i < coords_.size(); ++i)
            if (coords_[i].name == name) return i;
        return std::nullopt;
    }
    std::size_t index(const std::string& name) const {
        auto i = find(name);
        if (!i) throw Error("unknown coordinate '" + name + "'");
        return *i;
    }

    /// Multiset of weights, split by parity (even weights first, each sorted).
    std::pair<std::vector<Weight>, std::vector<Weight>> weight_set() const {
        std::vector<Weight> ev, od;
        for (const auto& c : coords_) (c.parity.is_even() ? ev : od).push_back(c.weight);
        std::sort(ev.begin(), ev.end());
        std::sort(od.begin(), od.end());
        return {ev, od};
    }

    /// Same coordinates (names, parities, weights); sampling boxes are ignored.
    bool same_coordinates(const Chart& other) const {
        if (coords_.size() != other.coords_.size()) return false;
        for (std::size_t i = 0; i < coords_.size(); ++i) {
            const auto &a = coords_[i], &b = other.coords_[i];
            if (a.name != b.name || !(a.parity == b.parity) || a.weight != b.weight) return false;
        }
        return true;
    }

    static bool valid_identifier(const std::string& s) {
        if (s.empty()) return false;
        auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
        if (!alpha(s[0])) return false;
        return std::all_of(s.begin(), s.end(), [&](char c) { return alpha(c) || (c >= '0' && c <= '9'); });
    }
    static bool is_reserved(const std::string& s) {
        static const char* names[] = {"d", "sin", "cos", "exp", "log", "sinh", "cosh"};
        return std::any_of(std::begin(names), std::end(names), [&](const char* n) { return s == n; });
    }

private:
    std::vector<CoordinateDecl> coords_;
    std::vector<Interval> box_;
};

using ChartPtr = std::shared_ptr<const Chart>;

inline ChartPtr make_chart(std::vector<CoordinateDecl> coords, std::vector<Interval> box = {}) {
    return std::make_shared<const Chart>(std::move(coords), std::move(box));
}

/// Shorthand used heavily in tests: names with parities and integer weights.
inline ChartPtr make_chart(const std::vector<std::string>& names, const std::vector<int>& parities,
                           const std::vector<long>& weights, std::vector<Interval> box = {}) {
    if (names.size() != parities.size() || names.size() != weights.size())
        throw Error("make_chart: size mismatch");
    std::vector<CoordinateDecl> c;
    for (std::size_t i = 0; i < names.size(); ++i) c.push_back({names[i], Parity(parities[i]), Weight(weights[i])});
    return make_chart(std::move(c), std::move(box));
}

inline bool same_chart(const ChartPtr& a, const ChartPtr& b) {
    return a == b || (a && b && a->same_coordinates(*b));
}

inline void require_same_chart(const ChartPtr& a, const ChartPtr& b) {
    if (!same_chart(a, b)) throw ChartMismatch();
}

} // namespace gdarboux
