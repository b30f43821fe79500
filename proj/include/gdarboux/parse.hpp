#pragma once

#include <cctype>
#include <string>
#include <string_view>

#include "expr.hpp"

namespace gdarboux {

namespace detail {

class Parser {
public:
    Parser(std::string_view text, ChartPtr chart) : s_(text), chart_(std::move(chart)) {}

    Expr parse() {
        Expr e = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }
    [[noreturn]] void fail_at(const std::string& msg, std::size_t at) const { throw ParseError(msg, at); }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool peek(char c) {
        skip();
        return pos_ < s_.size() && s_[pos_] == c;
    }
    void expect(char c) {
        if (!peek(c)) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    template <class F>
    Expr guarded(std::size_t at, F&& f) {
        try {
            return f();
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            fail_at(e.what(), at);
        }
    }

    Expr expr() {
        Expr acc = term();
        while (true) {
            skip();
            if (pos_ >= s_.size() || (s_[pos_] != '+' && s_[pos_] != '-')) break;
            char op = s_[pos_++];
            Expr rhs = term();
            acc = op == '+' ? acc + rhs : acc - rhs;
        }
        return acc;
    }

    Expr term() {
        Expr acc = factor();
        while (true) {
            skip();
            if (pos_ >= s_.size() || (s_[pos_] != '*' && s_[pos_] != '/')) break;
            std::size_t at = pos_;
            char op = s_[pos_++];
            Expr rhs = factor();
            acc = guarded(at, [&] { return op == '*' ? gmul(acc, rhs) : gdiv(acc, rhs); });
        }
        return acc;
    }

    Expr factor() {
        Expr b = base();
        if (peek('^')) {
            std::size_t at = pos_++;
            skip();
            std::size_t start = pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            if (start == pos_) fail("expected integer exponent");
            int e = std::stoi(std::string(s_.substr(start, pos_ - start)));
            b = guarded(at, [&] { return pow(b, e); });
        }
        return b;
    }

    std::string ident() {
        std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        return std::string(s_.substr(start, pos_ - start));
    }

    Expr number() {
        std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
            if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            } else {
                pos_ = save;
            }
        }
        std::string text(s_.substr(start, pos_ - start));
        try {
            return Expr::constant(chart_, Coefficient(parse_rational(text)));
        } catch (const Error&) {
            fail_at("malformed number '" + text + "'", start);
        }
    }

    static bool func_of(const std::string& n, Func& f) {
        static const std::pair<const char*, Func> table[] = {{"sin", Func::sin},   {"cos", Func::cos},
                                                             {"exp", Func::exp},   {"log", Func::log},
                                                             {"sinh", Func::sinh}, {"cosh", Func::cosh}};
        for (const auto& [name, fn] : table)
            if (n == name) {
                f = fn;
                return true;
            }
        return false;
    }

    Expr base() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        char c = s_[pos_];
        if (c == '-') {
            ++pos_;
            return -factor();
        }
        if (c == '(') {
            ++pos_;
            Expr e = expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            std::string name = ident();
            if (name == "d") {
                expect('(');
                skip();
                std::size_t at = pos_;
                std::string coord = ident();
                if (coord.empty()) fail("expected coordinate name in d(...)");
                auto idx = chart_->find(coord);
                if (!idx) fail_at("differential of unknown coordinate '" + coord + "'", at);
                expect(')');
                return Expr::differential(chart_, *idx);
            }
            Func f;
            if (func_of(name, f)) {
                expect('(');
                std::size_t at = pos_;
                Expr arg = expr();
                expect(')');
                return guarded(at, [&] { return make_atom(f, arg); });
            }
            auto idx = chart_->find(name);
            if (!idx) fail_at("unknown identifier '" + name + "'", start);
            return Expr::coordinate(chart_, *idx);
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    std::string_view s_;
    ChartPtr chart_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Parses an expression over `chart`. Throws ParseError with the byte offset.
inline Expr parse_expr(std::string_view text, const ChartPtr& chart) {
    return detail::Parser(text, chart).parse();
}

} // namespace gdarboux
