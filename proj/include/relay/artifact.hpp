#pragma once

// Plain-text controller artifact:
//
//   relay-controller 1
//   config_hash <16 hex digits>
//   gamma_opt <real>
//   period <real>
//   dimensions <states> <inputs> <outputs>
//   matrix A <rows> <cols>
//   <one line per row>
//   ... B, C, D likewise
//   end
//
// Reals are written in shortest round-trip form, so reading a file back
// reproduces the controller bit for bit.

#include <fstream>
#include <sstream>
#include <string>

#include "relay/config.hpp"
#include "relay/hinf.hpp"
#include "relay/text.hpp"

namespace relay {

inline constexpr int kArtifactVersion = 1;

struct ControllerArtifact {
  std::string config_hash;
  double gamma_opt;
  Controller controller;
};

inline std::string artifact_text(const ControllerArtifact& art) {
  const auto& k = art.controller.inner;
  std::ostringstream out;
  out << "relay-controller " << kArtifactVersion << "\n";
  out << "config_hash " << art.config_hash << "\n";
  out << "gamma_opt " << format_real(art.gamma_opt) << "\n";
  out << "period " << format_real(k.period()) << "\n";
  out << "dimensions " << k.states() << " " << k.inputs() << " " << k.outputs() << "\n";
  auto dump = [&](const char* name, const Matrix& m) {
    out << "matrix " << name << " " << m.rows() << " " << m.cols() << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << format_real(m(i, j));
      out << "\n";
    }
  };
  dump("A", k.a());
  dump("B", k.b());
  dump("C", k.c());
  dump("D", k.d());
  out << "end\n";
  return out.str();
}

inline void write_artifact(const std::string& path, const ControllerArtifact& art) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(path + ": cannot open for writing");
  f << artifact_text(art);
  if (!f) throw Error(path + ": write failed");
}

namespace detail {

[[noreturn]] inline void artifact_fail(const std::string& origin, int line, const std::string& what) {
  throw ValidationError(origin + ":" + std::to_string(line) + ": " + what);
}

}  // namespace detail

inline ControllerArtifact parse_artifact_text(const std::string& text, const std::string& origin = "<artifact>") {
  std::istringstream in(text);
  int line_no = 0;
  std::string line;
  auto next = [&](const std::string& tag) {
    if (!std::getline(in, line)) detail::artifact_fail(origin, line_no, "unexpected end of file, expected '" + tag + "'");
    ++line_no;
    std::istringstream ls(line);
    std::string t;
    ls >> t;
    if (t != tag) detail::artifact_fail(origin, line_no, "expected '" + tag + "'");
    std::string rest;
    std::getline(ls, rest);
    return std::string(detail::trim(rest));
  };
  auto real = [&](std::string_view s) {
    double v;
    if (!detail::parse_double(s, v)) detail::artifact_fail(origin, line_no, "malformed number '" + std::string(s) + "'");
    return v;
  };
  auto count = [&](std::istringstream& s) {
    std::string t;
    long long v = -1;
    if (!(s >> t) || !detail::parse_int(t, v) || v < 0 || v > 100000) detail::artifact_fail(origin, line_no, "malformed dimension");
    return static_cast<Eigen::Index>(v);
  };

  if (next("relay-controller") != std::to_string(kArtifactVersion)) detail::artifact_fail(origin, line_no, "unsupported artifact version");
  const std::string hash = next("config_hash");
  const double gamma = real(next("gamma_opt"));
  const double period = real(next("period"));
  std::istringstream dims(next("dimensions"));
  const Eigen::Index n = count(dims), m = count(dims), p = count(dims);

  auto matrix = [&](const char* name, Eigen::Index rows, Eigen::Index cols) {
    std::istringstream hdr(next("matrix"));
    std::string got;
    hdr >> got;
    if (got != name) detail::artifact_fail(origin, line_no, std::string("expected matrix ") + name);
    if (count(hdr) != rows || count(hdr) != cols) detail::artifact_fail(origin, line_no, std::string("matrix ") + name + " has the wrong shape");
    Matrix out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (!std::getline(in, line)) detail::artifact_fail(origin, line_no, "unexpected end of file in matrix " + std::string(name));
      ++line_no;
      std::istringstream ls(line);
      std::string tok;
      Eigen::Index j = 0;
      while (ls >> tok) {
        if (j >= cols) detail::artifact_fail(origin, line_no, "too many entries in matrix row");
        out(i, j++) = real(tok);
      }
      if (j != cols) detail::artifact_fail(origin, line_no, "too few entries in matrix row");
    }
    return out;
  };
  Matrix a = matrix("A", n, n), b = matrix("B", n, m), c = matrix("C", p, n), d = matrix("D", p, m);
  next("end");
  return {hash, gamma, Controller{DiscreteStateSpace(std::move(a), std::move(b), std::move(c), std::move(d), period), gamma}};
}

inline ControllerArtifact read_artifact(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError(path + ": cannot open controller file");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_artifact_text(ss.str(), path);
}

}  // namespace relay
