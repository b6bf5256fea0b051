#pragma once

#include <gmpxx.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>

namespace harnad {

// Base class of every domain failure. name() is the short error tag printed by the CLI.
class Error : public std::runtime_error {
public:
    Error(std::string name, const std::string& what)
        : std::runtime_error(name + ": " + what), name_(std::move(name)) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

#define HARNAD_ERROR(Type)                                                        \
    class Type : public Error {                                                   \
    public:                                                                       \
        explicit Type(const std::string& what = {}) : Error(#Type, what) {}       \
    };

HARNAD_ERROR(ParseError)
HARNAD_ERROR(DimensionMismatch)
HARNAD_ERROR(InvalidInput)
HARNAD_ERROR(ZeroPolynomial)
HARNAD_ERROR(NotInRange)
HARNAD_ERROR(ReblockFailure)
HARNAD_ERROR(NotDefined)
HARNAD_ERROR(NoMatch)
HARNAD_ERROR(NotStable)
HARNAD_ERROR(LeadingCoefficientZero)
HARNAD_ERROR(ResonantExponent)
HARNAD_ERROR(InfinityIrregular)
HARNAD_ERROR(PoleCollision)
HARNAD_ERROR(ResidualExceeded)
HARNAD_ERROR(SingularMatrix)

#undef HARNAD_ERROR

// Exact element of Q(i).
class Scalar {
public:
    Scalar() = default;
    Scalar(long v) : re_(v) {}  // NOLINT
    Scalar(int v) : re_(v) {}   // NOLINT
    Scalar(mpq_class re) : re_(std::move(re)) { re_.canonicalize(); }  // NOLINT
    Scalar(mpq_class re, mpq_class im) : re_(std::move(re)), im_(std::move(im)) {
        re_.canonicalize();
        im_.canonicalize();
    }
    Scalar(long num, long den) : re_(num, den) {
        if (den == 0) throw InvalidInput("zero denominator");
        re_.canonicalize();
    }

    static Scalar i() { return Scalar(mpq_class(0), mpq_class(1)); }

    const mpq_class& re() const { return re_; }
    const mpq_class& im() const { return im_; }

    bool is_zero() const { return sgn(re_) == 0 && sgn(im_) == 0; }
    bool is_real() const { return sgn(im_) == 0; }
    bool is_integer() const { return is_real() && re_.get_den() == 1; }

    Scalar conj() const { return Scalar(re_, -im_); }
    mpq_class norm2() const { return re_ * re_ + im_ * im_; }

    std::complex<double> to_complex() const { return {re_.get_d(), im_.get_d()}; }
    double abs_approx() const { return std::abs(to_complex()); }

    Scalar inverse() const {
        if (is_zero()) throw SingularMatrix("division by zero scalar");
        mpq_class n = norm2();
        return Scalar(mpq_class(re_ / n), mpq_class(-im_ / n));
    }

    Scalar& operator+=(const Scalar& o) { re_ += o.re_; im_ += o.im_; return *this; }
    Scalar& operator-=(const Scalar& o) { re_ -= o.re_; im_ -= o.im_; return *this; }
    Scalar& operator*=(const Scalar& o) {
        if (sgn(im_) == 0 && sgn(o.im_) == 0) {
            re_ *= o.re_;
            return *this;
        }
        mpq_class r = re_ * o.re_ - im_ * o.im_;
        mpq_class m = re_ * o.im_ + im_ * o.re_;
        re_ = std::move(r);
        im_ = std::move(m);
        return *this;
    }
    Scalar& operator/=(const Scalar& o) {
        if (o.is_zero()) throw SingularMatrix("division by zero scalar");
        if (sgn(im_) == 0 && sgn(o.im_) == 0) {
            re_ /= o.re_;
            return *this;
        }
        return *this *= o.inverse();
    }

    friend Scalar operator+(Scalar a, const Scalar& b) { return a += b; }
    friend Scalar operator-(Scalar a, const Scalar& b) { return a -= b; }
    friend Scalar operator*(Scalar a, const Scalar& b) { return a *= b; }
    friend Scalar operator/(Scalar a, const Scalar& b) { return a /= b; }
    friend Scalar operator-(const Scalar& a) { return Scalar(mpq_class(-a.re_), mpq_class(-a.im_)); }

    friend bool operator==(const Scalar& a, const Scalar& b) { return a.re_ == b.re_ && a.im_ == b.im_; }
    friend bool operator!=(const Scalar& a, const Scalar& b) { return !(a == b); }

    // Canonical text form "p/q" (or "p" when q = 1) of each part.
    static std::string rational_to_string(const mpq_class& q) { return q.get_str(); }

    static mpq_class parse_rational(const std::string& s) {
        if (s.empty()) throw ParseError("empty rational");
        std::size_t k = 0;
        if (s[0] == '-' || s[0] == '+') k = 1;
        bool slash = false;
        bool digit_before = false, digit_after = false;
        for (std::size_t j = k; j < s.size(); ++j) {
            char c = s[j];
            if (c == '/') {
                if (slash) throw ParseError("malformed rational '" + s + "'");
                slash = true;
            } else if (c >= '0' && c <= '9') {
                (slash ? digit_after : digit_before) = true;
            } else {
                throw ParseError("malformed rational '" + s + "'");
            }
        }
        if (!digit_before || (slash && !digit_after)) throw ParseError("malformed rational '" + s + "'");
        std::string body = s[0] == '+' ? s.substr(1) : s;
        mpq_class q;
        if (q.set_str(body, 10) != 0) throw ParseError("malformed rational '" + s + "'");
        if (q.get_den() == 0) throw ParseError("zero denominator in '" + s + "'");
        q.canonicalize();
        return q;
    }

    friend std::ostream& operator<<(std::ostream& os, const Scalar& s) {
        os << s.re_.get_str();
        if (sgn(s.im_) != 0) os << (sgn(s.im_) > 0 ? "+" : "") << s.im_.get_str() << "i";
        return os;
    }

private:
    mpq_class re_{0};
    mpq_class im_{0};
};

using cplx = std::complex<double>;

// Field operations shared by the exact and floating-point matrix code.
template <class F>
struct field_traits;

template <>
struct field_traits<Scalar> {
    static constexpr bool exact = true;
    static bool is_zero(const Scalar& x, double = 0.0) { return x.is_zero(); }
    static Scalar conj(const Scalar& x) { return x.conj(); }
    static double magnitude(const Scalar& x) { return x.abs_approx(); }
    static Scalar from_int(long v) { return Scalar(v); }
    static Scalar from_scalar(const Scalar& s) { return s; }
};

template <>
struct field_traits<cplx> {
    static constexpr bool exact = false;
    static bool is_zero(const cplx& x, double tol) { return std::abs(x) <= tol; }
    static cplx conj(const cplx& x) { return std::conj(x); }
    static double magnitude(const cplx& x) { return std::abs(x); }
    static cplx from_int(long v) { return cplx(static_cast<double>(v), 0.0); }
    static cplx from_scalar(const Scalar& s) { return s.to_complex(); }
};

}  // namespace harnad
