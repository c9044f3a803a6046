#include "fockdist/angle.hpp"

#include "fockdist/error.hpp"

#include <charconv>
#include <cstdio>
#include <numeric>

namespace fockdist {

PiFraction::PiFraction(std::int64_t n, std::int64_t d) {
    if (d == 0) throw Error(ErrorKind::InvalidSpec, "pi fraction with zero denominator");
    if (d < 0) { n = -n; d = -d; }
    const std::int64_t g = std::gcd(n, d);
    num = g ? n / g : 0;
    den = g ? d / g : 1;
}

Angle Angle::radians(double value) {
    Angle a;
    a.radians_ = value;
    a.frac_.reset();
    if (value == 0.0) a.frac_ = PiFraction{};
    return a;
}

Angle Angle::pi_times(std::int64_t num, std::int64_t den) {
    Angle a;
    a.frac_ = PiFraction(num, den);
    a.radians_ = std::numbers::pi * static_cast<double>(a.frac_->num) /
                 static_cast<double>(a.frac_->den);
    return a;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

bool parse_int(std::string_view s, std::int64_t& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

[[noreturn]] void bad_angle(std::string_view text) {
    throw Error(ErrorKind::InvalidSpec, "cannot parse angle '" + std::string(text) + "'");
}

}  // namespace

Angle Angle::parse(std::string_view text) {
    std::string_view s = trim(text);
    const auto pos = s.find("pi");
    if (pos == std::string_view::npos) {
        double v = 0;
        if (!parse_double(s, v) || !std::isfinite(v)) bad_angle(text);
        return radians(v);
    }

    // [sign][num][*]pi[*num][/den]
    std::string_view head = trim(s.substr(0, pos));
    std::string_view tail = trim(s.substr(pos + 2));
    std::int64_t num = 1;
    if (!head.empty() && head.back() == '*') head = trim(head.substr(0, head.size() - 1));
    if (head == "-") {
        num = -1;
    } else if (!head.empty() && head != "+") {
        if (!parse_int(head, num)) bad_angle(text);
    }
    std::int64_t den = 1;
    if (!tail.empty() && tail.front() == '*') {
        tail = trim(tail.substr(1));
        const auto slash = tail.find('/');
        std::int64_t mul = 1;
        if (!parse_int(tail.substr(0, slash), mul)) bad_angle(text);
        num *= mul;
        tail = slash == std::string_view::npos ? std::string_view{} : tail.substr(slash);
    }
    if (!tail.empty()) {
        if (tail.front() != '/') bad_angle(text);
        if (!parse_int(tail.substr(1), den) || den == 0) bad_angle(text);
    }
    return pi_times(num, den);
}

Angle Angle::reduced() const {
    if (frac_) {
        const std::int64_t period = 2 * frac_->den;
        std::int64_t n = frac_->num % period;
        if (n < 0) n += period;
        return pi_times(n, frac_->den);
    }
    const double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(radians_, two_pi);
    if (r < 0) r += two_pi;
    if (r >= two_pi) r = 0.0;
    return radians(r);
}

__extension__ using wide_int = __int128;

double Angle::half_turns(std::int64_t n) const {
    if (frac_) {
        const wide_int period = 2 * static_cast<wide_int>(frac_->den);
        wide_int k = (static_cast<wide_int>(frac_->num) * n) % period;
        if (k < 0) k += period;
        return static_cast<double>(k) / static_cast<double>(frac_->den);
    }
    double x = std::fmod(radians_ / std::numbers::pi * static_cast<double>(n), 2.0);
    if (x < 0) x += 2.0;
    return x;
}

std::pair<int, double> Angle::quadrant_split(std::int64_t n) const {
    if (frac_) {
        // k / den half turns with k in [0, 2 den); quarter turns are 2k / den.
        const wide_int den = frac_->den;
        wide_int k = (static_cast<wide_int>(frac_->num) * n) % (2 * den);
        if (k < 0) k += 2 * den;
        const wide_int quarters = 2 * k;
        const int quadrant = static_cast<int>(quarters / den);
        const wide_int rest = quarters - quadrant * den;
        return {quadrant, static_cast<double>(rest) / (2.0 * static_cast<double>(den))};
    }
    const double x = half_turns(n);
    const int quadrant = static_cast<int>(std::floor(x * 2.0));
    return {quadrant, x - 0.5 * quadrant};
}

std::string Angle::label() const {
    if (!frac_) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", radians_);
        return buf;
    }
    const auto [num, den] = *frac_;
    if (num == 0) return "0";
    std::string out;
    if (num == -1) out = "-pi";
    else if (num == 1) out = "pi";
    else out = std::to_string(num) + "pi";
    if (den != 1) out += "/" + std::to_string(den);
    return out;
}

Angle Angle::operator-() const {
    if (frac_) return pi_times(-frac_->num, frac_->den);
    return radians(-radians_);
}

}  // namespace fockdist
