#pragma once

// Text dump of a MilpModel in the LP exchange dialect that MILP solvers and
// modeling tools read.  Switched rows cannot be expressed directly, so each
// stored row  lo + lo_scale*b <= a.x <= hi + hi_scale*b  is written with the
// binary term moved across:  a.x - lo_scale*b >= lo  and
// a.x - hi_scale*b <= hi, one inequality per finite side (a single equality
// when both sides and scales coincide).  Every constraint is preceded by a
// comment carrying its functional tag.

#include <charconv>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "model.hpp"

namespace lpp {

namespace lp_detail {

// Shortest decimal form that parses back to the same double; locale-free.
inline std::string num(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc() ? std::string(buf, end) : std::string("0");
}

// The dialect reserves + - * / ^ < > = : and whitespace inside names.
inline std::string safe_name(const std::string& raw) {
    std::string out = raw;
    for (char& c : out) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '_' || c == '[' || c == ']' || c == ',' ||
                        c == '.' || c == '(' || c == ')' || c == '{' || c == '}';
        if (!ok) c = '_';
    }
    if (out.empty() || (out[0] >= '0' && out[0] <= '9') || out[0] == '.') out = "x" + out;
    return out;
}

// One linear expression, wrapped at a comfortable width.  Terms with equal
// indices are merged first; some readers refuse repeated columns in a row.
inline void put_terms(std::ostream& os, const std::vector<std::pair<int, double>>& terms,
                      const std::vector<VarDef>& vars) {
    std::map<int, double> merged;
    std::vector<int> order;
    for (const auto& [j, c] : terms) {
        if (merged.emplace(j, 0.0).second) order.push_back(j);
        merged[j] += c;
    }
    bool first = true;
    std::size_t col = 0;
    for (int j : order) {
        const double c = merged[j];
        if (c == 0.0 && order.size() > 1) continue;
        std::string term;
        if (c < 0.0)
            term = "- ";
        else if (!first)
            term = "+ ";
        term += num(c < 0.0 ? -c : c) + " " + safe_name(vars[static_cast<std::size_t>(j)].name);
        if (col + term.size() > 72) {
            os << "\n  ";
            col = 2;
        }
        os << " " << term;
        col += term.size() + 1;
        first = false;
    }
    if (first) os << " 0 " << safe_name(vars.empty() ? "none" : vars[0].name);
}

}  // namespace lp_detail

inline void write_lp(std::ostream& os, const MilpModel& m) {
    using namespace lp_detail;
    os << "\\ " << (m.mode == Mode::reconfiguration ? "reconfiguration" : "restoration")
       << " model, lambda=" << m.lambda << ", " << m.vars.size() << " variables, "
       << m.rows.size() << " stored rows\n";
    os << (m.sense == ObjSense::minimize ? "Minimize\n" : "Maximize\n");
    os << " obj:";
    put_terms(os, m.objective, m.vars);
    os << "\nSubject To\n";

    for (const auto& r : m.rows) {
        const bool has_lo = std::isfinite(r.lo);
        const bool has_hi = std::isfinite(r.hi);
        if (!has_lo && !has_hi) continue;
        os << "\\ tag=" << row_tag_name(r.tag) << "\n";
        const std::string base = safe_name(r.name);

        auto side = [&](const char* suffix, double scale, const char* rel, double rhs) {
            os << " " << base << suffix << ":";
            std::vector<std::pair<int, double>> terms = r.coeffs;
            if (r.switch_var >= 0 && scale != 0.0) terms.emplace_back(r.switch_var, -scale);
            put_terms(os, terms, m.vars);
            os << " " << rel << " " << num(rhs) << "\n";
        };

        const bool equality =
            has_lo && has_hi && r.lo == r.hi && (r.switch_var < 0 || r.lo_scale == r.hi_scale);
        if (equality) {
            side("", r.lo_scale, "=", r.lo);
            continue;
        }
        const bool both = has_lo && has_hi;
        if (has_lo) side(both ? "_lo" : "", r.lo_scale, ">=", r.lo);
        if (has_hi) side(both ? "_hi" : "", r.hi_scale, "<=", r.hi);
    }

    os << "Bounds\n";
    for (const auto& v : m.vars) {
        const std::string name = safe_name(v.name);
        const bool has_lo = std::isfinite(v.lo);
        const bool has_hi = std::isfinite(v.hi);
        if (has_lo && has_hi && v.lo == v.hi)
            os << " " << name << " = " << num(v.lo) << "\n";
        else if (has_lo && has_hi)
            os << " " << num(v.lo) << " <= " << name << " <= " << num(v.hi) << "\n";
        else if (has_lo)
            os << " " << name << " >= " << num(v.lo) << "\n";
        else if (has_hi)
            os << " -infinity <= " << name << " <= " << num(v.hi) << "\n";
        else
            os << " " << name << " free\n";
    }

    bool any_binary = false;
    for (const auto& v : m.vars) any_binary |= v.is_binary;
    if (any_binary) {
        os << "Binaries\n";
        std::size_t col = 0;
        for (const auto& v : m.vars) {
            if (!v.is_binary) continue;
            const std::string name = safe_name(v.name);
            if (col == 0) {
                os << " " << name;
                col = 1 + name.size();
            } else if (col + name.size() + 1 > 72) {
                os << "\n " << name;
                col = 1 + name.size();
            } else {
                os << " " << name;
                col += name.size() + 1;
            }
        }
        os << "\n";
    }
    os << "End\n";
}

inline std::string lp_format(const MilpModel& m) {
    std::ostringstream os;
    write_lp(os, m);
    return os.str();
}

}  // namespace lpp
