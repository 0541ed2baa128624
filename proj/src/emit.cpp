#include "pwlv/emit.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace pwlv {

std::string format_number(double v) {
  if (v == 0.0) return "0";  // canonicalize -0
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

namespace {

std::string row_name(const LinearConstraint& c, size_t idx) {
  if (!c.name.empty()) return c.name;
  return "c" + std::to_string(idx + 1);
}

}  // namespace

void write_mps(const MipModel& model, std::ostream& out, const std::string& name) {
  out << "NAME " << name << "\n";
  if (model.objective.maximize) out << "OBJSENSE\n MAX\n";
  out << "ROWS\n";
  out << " N obj\n";
  for (size_t r = 0; r < model.rows.size(); ++r) {
    char s = model.rows[r].sense == Sense::LE ? 'L' : model.rows[r].sense == Sense::GE ? 'G' : 'E';
    out << " " << s << " " << row_name(model.rows[r], r) << "\n";
  }

  // column-major coefficient lists
  std::vector<std::vector<std::pair<std::string, double>>> cols(model.vars.size());
  for (const auto& t : model.objective.terms) cols[t.var].push_back({"obj", t.coef});
  for (size_t r = 0; r < model.rows.size(); ++r)
    for (const auto& t : model.rows[r].terms)
      cols[t.var].push_back({row_name(model.rows[r], r), t.coef});

  out << "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (size_t v = 0; v < model.vars.size(); ++v) {
    bool is_int = model.vars[v].kind == VarKind::Binary;
    if (is_int != in_int) {
      out << " MARKER" << ++marker << " 'MARKER' " << (is_int ? "'INTORG'" : "'INTEND'") << "\n";
      in_int = is_int;
    }
    for (const auto& [rn, coef] : cols[v])
      out << " " << model.vars[v].name << " " << rn << " " << format_number(coef) << "\n";
    if (cols[v].empty())
      out << " " << model.vars[v].name << " obj 0\n";  // keep empty columns visible
  }
  if (in_int) out << " MARKER" << ++marker << " 'MARKER' 'INTEND'\n";

  out << "RHS\n";
  for (size_t r = 0; r < model.rows.size(); ++r)
    if (model.rows[r].rhs != 0.0)
      out << " rhs " << row_name(model.rows[r], r) << " " << format_number(model.rows[r].rhs)
          << "\n";

  out << "BOUNDS\n";
  for (const auto& v : model.vars) {
    if (v.kind == VarKind::Binary) {
      out << " BV bnd " << v.name << "\n";
      continue;
    }
    if (v.lo == v.hi) {
      out << " FX bnd " << v.name << " " << format_number(v.lo) << "\n";
      continue;
    }
    if (v.lo == -kInf && v.hi == kInf) {
      out << " FR bnd " << v.name << "\n";
      continue;
    }
    if (v.lo == -kInf) out << " MI bnd " << v.name << "\n";
    else if (v.lo != 0.0) out << " LO bnd " << v.name << " " << format_number(v.lo) << "\n";
    if (v.hi != kInf) out << " UP bnd " << v.name << " " << format_number(v.hi) << "\n";
  }
  out << "ENDATA\n";
}

void write_lp(const MipModel& model, std::ostream& out) {
  out << (model.objective.maximize ? "Maximize" : "Minimize") << "\n obj:";
  if (model.objective.terms.empty()) out << " 0";
  for (const auto& t : model.objective.terms) {
    double c = t.coef;
    out << (c < 0 ? " - " : " + ") << format_number(std::abs(c)) << " " << model.vars[t.var].name;
  }
  out << "\nSubject To\n";
  for (size_t r = 0; r < model.rows.size(); ++r) {
    const auto& row = model.rows[r];
    out << " " << row_name(row, r) << ":";
    for (const auto& t : row.terms) {
      double c = t.coef;
      out << (c < 0 ? " - " : " + ") << format_number(std::abs(c)) << " " << model.vars[t.var].name;
    }
    out << (row.sense == Sense::LE ? " <= " : row.sense == Sense::GE ? " >= " : " = ")
        << format_number(row.rhs) << "\n";
  }
  out << "Bounds\n";
  for (const auto& v : model.vars) {
    if (v.kind == VarKind::Binary) continue;
    if (v.lo == -kInf && v.hi == kInf) {
      out << " " << v.name << " free\n";
    } else if (v.lo == v.hi) {
      out << " " << v.name << " = " << format_number(v.lo) << "\n";
    } else {
      out << " " << (v.lo == -kInf ? "-inf" : format_number(v.lo)) << " <= " << v.name
          << " <= " << (v.hi == kInf ? "+inf" : format_number(v.hi)) << "\n";
    }
  }
  bool any_bin = false;
  for (const auto& v : model.vars) any_bin = any_bin || v.kind == VarKind::Binary;
  if (any_bin) {
    out << "Binaries\n";
    for (const auto& v : model.vars)
      if (v.kind == VarKind::Binary) out << " " << v.name << "\n";
  }
  out << "End\n";
}

}  // namespace pwlv
