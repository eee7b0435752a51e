#include "kstep/rational.hpp"

#include <cctype>

namespace kstep {

namespace {

bool all_digits(std::string_view s)
{
    if (s.empty()) {
        return false;
    }
    for (char c : s) {
        if (!std::isdigit(static_cast<unsigned char>(c))) {
            return false;
        }
    }
    return true;
}

mpz_class pow10(unsigned long exponent)
{
    mpz_class result;
    mpz_ui_pow_ui(result.get_mpz_t(), 10, exponent);
    return result;
}

}  // namespace

Rational parse_rational(std::string_view text)
{
    std::string_view s = text;
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    if (s.empty()) {
        throw ParseError("empty rational literal");
    }

    if (auto slash = s.find('/'); slash != std::string_view::npos) {
        std::string_view num = s.substr(0, slash);
        std::string_view den = s.substr(slash + 1);
        bool negative = false;
        if (!num.empty() && (num.front() == '-' || num.front() == '+')) {
            negative = num.front() == '-';
            num.remove_prefix(1);
        }
        if (!all_digits(num) || !all_digits(den)) {
            throw ParseError("malformed rational literal '" + std::string(text) + "'");
        }
        mpz_class n(std::string(num), 10);
        mpz_class d(std::string(den), 10);
        if (d == 0) {
            throw ParseError("zero denominator in '" + std::string(text) + "'");
        }
        Rational r(negative ? mpz_class(-n) : n, d);
        r.canonicalize();
        return r;
    }

    bool negative = false;
    if (s.front() == '-' || s.front() == '+') {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    long exponent = 0;
    if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
        std::string_view exp_part = s.substr(e + 1);
        bool exp_negative = false;
        if (!exp_part.empty() && (exp_part.front() == '-' || exp_part.front() == '+')) {
            exp_negative = exp_part.front() == '-';
            exp_part.remove_prefix(1);
        }
        if (!all_digits(exp_part) || exp_part.size() > 6) {
            throw ParseError("malformed exponent in '" + std::string(text) + "'");
        }
        exponent = std::stol(std::string(exp_part));
        if (exp_negative) {
            exponent = -exponent;
        }
        s = s.substr(0, e);
    }
    std::string digits;
    long frac_digits = 0;
    if (auto dot = s.find('.'); dot != std::string_view::npos) {
        std::string_view int_part = s.substr(0, dot);
        std::string_view frac_part = s.substr(dot + 1);
        if ((!int_part.empty() && !all_digits(int_part)) ||
            (!frac_part.empty() && !all_digits(frac_part)) ||
            (int_part.empty() && frac_part.empty())) {
            throw ParseError("malformed decimal literal '" + std::string(text) + "'");
        }
        digits = std::string(int_part) + std::string(frac_part);
        frac_digits = static_cast<long>(frac_part.size());
    } else {
        if (!all_digits(s)) {
            throw ParseError("malformed rational literal '" + std::string(text) + "'");
        }
        digits = std::string(s);
    }
    mpz_class mantissa(digits, 10);
    if (negative) {
        mantissa = -mantissa;
    }
    long scale = exponent - frac_digits;
    Rational r;
    if (scale >= 0) {
        r = Rational(mantissa * pow10(static_cast<unsigned long>(scale)));
    } else {
        r = Rational(mantissa, pow10(static_cast<unsigned long>(-scale)));
        r.canonicalize();
    }
    return r;
}

std::string to_string(const Rational& value)
{
    if (value.get_den() == 1) {
        return value.get_num().get_str();
    }
    // Finite decimal expansion iff the reduced denominator is 2^a * 5^b.
    mpz_class den = value.get_den();
    unsigned long twos = 0;
    unsigned long fives = 0;
    while (mpz_divisible_ui_p(den.get_mpz_t(), 2)) {
        den /= 2;
        ++twos;
    }
    while (mpz_divisible_ui_p(den.get_mpz_t(), 5)) {
        den /= 5;
        ++fives;
    }
    if (den != 1) {
        return value.get_num().get_str() + "/" + value.get_den().get_str();
    }
    unsigned long places = std::max(twos, fives);
    mpz_class scaled = value.get_num() * pow10(places) / value.get_den();
    bool negative = scaled < 0;
    if (negative) {
        scaled = -scaled;
    }
    std::string digits = scaled.get_str();
    if (digits.size() <= places) {
        digits.insert(0, places - digits.size() + 1, '0');
    }
    digits.insert(digits.size() - places, ".");
    return (negative ? "-" : "") + digits;
}

double to_double(const Rational& value) { return value.get_d(); }

}  // namespace kstep
