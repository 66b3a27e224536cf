#pragma once

// Arithmetic over node coordinates for initial conditions:
//   + - * / ( ) sin cos exp, numeric literals, pi, x, y.

#include <cctype>
#include <charconv>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>

#include "fbpsim/errors.hpp"

namespace fbpsim {

class Expression {
public:
    static Expression parse(std::string_view text) {
        Parser p{text};
        auto root = p.expr();
        p.skip_ws();
        if (p.pos != text.size()) p.fail("unexpected '" + std::string(1, text[p.pos]) + "'");
        return Expression(std::string(text), std::move(root));
    }

    double operator()(double x, double y = 0.0) const { return root_->eval(x, y); }
    const std::string& text() const { return text_; }

private:
    struct Node {
        virtual ~Node() = default;
        virtual double eval(double x, double y) const = 0;
    };
    using Ptr = std::shared_ptr<const Node>;

    struct Constant : Node {
        double v;
        explicit Constant(double v) : v(v) {}
        double eval(double, double) const override { return v; }
    };
    struct Coordinate : Node {
        int axis;
        explicit Coordinate(int a) : axis(a) {}
        double eval(double x, double y) const override { return axis == 0 ? x : y; }
    };
    struct Unary : Node {
        char op;
        Ptr a;
        Unary(char op, Ptr a) : op(op), a(std::move(a)) {}
        double eval(double x, double y) const override {
            const double v = a->eval(x, y);
            switch (op) {
                case '-': return -v;
                case 's': return std::sin(v);
                case 'c': return std::cos(v);
                default: return std::exp(v);
            }
        }
    };
    struct Binary : Node {
        char op;
        Ptr a, b;
        Binary(char op, Ptr a, Ptr b) : op(op), a(std::move(a)), b(std::move(b)) {}
        double eval(double x, double y) const override {
            const double l = a->eval(x, y), r = b->eval(x, y);
            switch (op) {
                case '+': return l + r;
                case '-': return l - r;
                case '*': return l * r;
                default: return l / r;
            }
        }
    };

    struct Parser {
        std::string_view s;
        std::size_t pos = 0;

        [[noreturn]] void fail(const std::string& msg) const {
            throw ParseError("expression: " + msg + " at column " + std::to_string(pos + 1), 1,
                             static_cast<int>(pos + 1));
        }
        void skip_ws() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }
        bool eat(char c) {
            skip_ws();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }

        Ptr expr() {
            Ptr lhs = term();
            for (;;) {
                if (eat('+')) lhs = std::make_shared<Binary>('+', lhs, term());
                else if (eat('-')) lhs = std::make_shared<Binary>('-', lhs, term());
                else return lhs;
            }
        }
        Ptr term() {
            Ptr lhs = unary();
            for (;;) {
                if (eat('*')) lhs = std::make_shared<Binary>('*', lhs, unary());
                else if (eat('/')) lhs = std::make_shared<Binary>('/', lhs, unary());
                else return lhs;
            }
        }
        Ptr unary() {
            if (eat('-')) return std::make_shared<Unary>('-', unary());
            if (eat('+')) return unary();
            return primary();
        }
        Ptr primary() {
            skip_ws();
            if (pos >= s.size()) fail("unexpected end of input");
            if (eat('(')) {
                Ptr e = expr();
                if (!eat(')')) fail("expected ')'");
                return e;
            }
            const char c = s[pos];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
            if (std::isalpha(static_cast<unsigned char>(c))) {
                const std::size_t start = pos;
                while (pos < s.size() && std::isalnum(static_cast<unsigned char>(s[pos]))) ++pos;
                const std::string_view id = s.substr(start, pos - start);
                if (id == "x") return std::make_shared<Coordinate>(0);
                if (id == "y") return std::make_shared<Coordinate>(1);
                if (id == "pi") return std::make_shared<Constant>(std::numbers::pi);
                char op = 0;
                if (id == "sin") op = 's';
                else if (id == "cos") op = 'c';
                else if (id == "exp") op = 'e';
                if (op == 0) {
                    pos = start;
                    fail("unknown identifier '" + std::string(id) + "'");
                }
                if (!eat('(')) fail("expected '(' after " + std::string(id));
                Ptr arg = expr();
                if (!eat(')')) fail("expected ')'");
                return std::make_shared<Unary>(op, arg);
            }
            fail("unexpected '" + std::string(1, c) + "'");
        }
        Ptr number() {
            const char* first = s.data() + pos;
            const char* last = s.data() + s.size();
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec != std::errc()) fail("malformed number");
            pos += static_cast<std::size_t>(ptr - first);
            return std::make_shared<Constant>(v);
        }
    };

    Expression(std::string text, Ptr root) : text_(std::move(text)), root_(std::move(root)) {}

    std::string text_;
    Ptr root_;
};

}  // namespace fbpsim
