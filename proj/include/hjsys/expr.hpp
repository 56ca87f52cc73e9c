#pragma once

// Arithmetic expressions over {x, y}: +, -, *, /, unary minus, parentheses,
// numeric literals, pi, and the functions sin, cos, abs, min, max. Division
// by zero evaluates to zero so that evaluation is total on the torus.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hjsys/errors.hpp"

namespace hjsys {

class Expression {
  public:
    double eval(double x, double y = 0.0) const { return eval_node(root_, x, y); }
    const std::string& text() const { return text_; }

    static Expression parse(const std::string& text);

  private:
    enum class Op { Constant, VarX, VarY, Add, Sub, Mul, Div, Neg, Sin, Cos, Abs, Min, Max };

    struct Node {
        Op op;
        double value = 0.0;
        std::vector<Node> args;
    };

    static double eval_node(const Node& n, double x, double y) {
        switch (n.op) {
            case Op::Constant: return n.value;
            case Op::VarX: return x;
            case Op::VarY: return y;
            case Op::Add: return eval_node(n.args[0], x, y) + eval_node(n.args[1], x, y);
            case Op::Sub: return eval_node(n.args[0], x, y) - eval_node(n.args[1], x, y);
            case Op::Mul: return eval_node(n.args[0], x, y) * eval_node(n.args[1], x, y);
            case Op::Div: {
                const double den = eval_node(n.args[1], x, y);
                return den == 0.0 ? 0.0 : eval_node(n.args[0], x, y) / den;
            }
            case Op::Neg: return -eval_node(n.args[0], x, y);
            case Op::Sin: return std::sin(eval_node(n.args[0], x, y));
            case Op::Cos: return std::cos(eval_node(n.args[0], x, y));
            case Op::Abs: return std::abs(eval_node(n.args[0], x, y));
            case Op::Min: {
                double v = eval_node(n.args[0], x, y);
                for (std::size_t k = 1; k < n.args.size(); ++k)
                    v = std::min(v, eval_node(n.args[k], x, y));
                return v;
            }
            case Op::Max: {
                double v = eval_node(n.args[0], x, y);
                for (std::size_t k = 1; k < n.args.size(); ++k)
                    v = std::max(v, eval_node(n.args[k], x, y));
                return v;
            }
        }
        return 0.0;
    }

    class Parser {
      public:
        explicit Parser(const std::string& text) : s_(text) {}

        Node run() {
            Node n = expr();
            skip_space();
            if (pos_ != s_.size()) throw SyntaxError("unexpected trailing input", pos_);
            return n;
        }

      private:
        void skip_space() {
            while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        }

        bool consume(char c) {
            skip_space();
            if (pos_ < s_.size() && s_[pos_] == c) {
                ++pos_;
                return true;
            }
            return false;
        }

        Node expr() {
            Node lhs = term();
            for (;;) {
                if (consume('+')) lhs = Node{Op::Add, 0.0, {std::move(lhs), term()}};
                else if (consume('-')) lhs = Node{Op::Sub, 0.0, {std::move(lhs), term()}};
                else return lhs;
            }
        }

        Node term() {
            Node lhs = unary();
            for (;;) {
                if (consume('*')) lhs = Node{Op::Mul, 0.0, {std::move(lhs), unary()}};
                else if (consume('/')) lhs = Node{Op::Div, 0.0, {std::move(lhs), unary()}};
                else return lhs;
            }
        }

        Node unary() {
            if (consume('-')) return Node{Op::Neg, 0.0, {unary()}};
            return primary();
        }

        Node primary() {
            skip_space();
            if (pos_ >= s_.size()) throw SyntaxError("operand expected", pos_);
            const char c = s_[pos_];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
            if (std::isalpha(static_cast<unsigned char>(c))) return word();
            if (consume('(')) {
                Node inner = expr();
                if (!consume(')')) throw SyntaxError("expected ')'", pos_);
                return inner;
            }
            throw SyntaxError(std::string("unexpected character '") + c + "'", pos_);
        }

        Node number() {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) throw SyntaxError("malformed number", pos_);
            pos_ += static_cast<std::size_t>(end - begin);
            return Node{Op::Constant, v, {}};
        }

        Node word() {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            const std::string name = s_.substr(start, pos_ - start);
            if (name == "x") return Node{Op::VarX, 0.0, {}};
            if (name == "y") return Node{Op::VarY, 0.0, {}};
            if (name == "pi") return Node{Op::Constant, 3.14159265358979323846, {}};

            Op op;
            std::size_t min_args = 1;
            if (name == "sin") op = Op::Sin;
            else if (name == "cos") op = Op::Cos;
            else if (name == "abs") op = Op::Abs;
            else if (name == "min") { op = Op::Min; min_args = 2; }
            else if (name == "max") { op = Op::Max; min_args = 2; }
            else throw SyntaxError("unknown identifier '" + name + "'", start);

            if (!consume('(')) throw SyntaxError("expected '(' after " + name, pos_);
            Node call{op, 0.0, {}};
            call.args.push_back(expr());
            while (consume(',')) call.args.push_back(expr());
            if (!consume(')')) throw SyntaxError("expected ')'", pos_);
            if (call.args.size() < min_args)
                throw SyntaxError(name + " needs at least " + std::to_string(min_args) + " arguments",
                                  start);
            if (min_args == 1 && call.args.size() != 1)
                throw SyntaxError(name + " takes one argument", start);
            return call;
        }

        const std::string& s_;
        std::size_t pos_ = 0;
    };

    Node root_{Op::Constant, 0.0, {}};
    std::string text_;
};

inline Expression Expression::parse(const std::string& text) {
    Expression e;
    e.root_ = Parser(text).run();
    e.text_ = text;
    return e;
}

inline Expression parse_expression(const std::string& text) { return Expression::parse(text); }

}  // namespace hjsys
