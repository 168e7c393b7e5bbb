#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dgtrack/common.hpp"
#include "dgtrack/mesh.hpp"

namespace dgtrack {

// Shortest round-trippable decimal form; keeps text files byte-stable.
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Plain-text mesh format:
//   dim p n_nodes n_elems
//   <n_nodes node coordinate lines>
//   <n_elems connectivity lines>
//   <boundary-face lines: elem local_face tag>
// ---------------------------------------------------------------------------
inline std::string mesh_to_text(const ReferenceMesh& mesh) {
  std::ostringstream os;
  os << mesh.dim << ' ' << mesh.p << ' ' << mesh.n_nodes() << ' ' << mesh.n_elems() << '\n';
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    for (int a = 0; a < mesh.dim; ++a) os << (a ? " " : "") << fmt_double(mesh.nodes(n, a));
    os << '\n';
  }
  for (int e = 0; e < mesh.n_elems(); ++e) {
    for (int i = 0; i < mesh.np(); ++i) os << (i ? " " : "") << mesh.elems(e, i);
    os << '\n';
  }
  for (const auto& bf : mesh.boundary)
    os << bf.elem << ' ' << bf.local_face << ' ' << bf.tag << '\n';
  return os.str();
}

inline ReferenceMesh mesh_from_text(std::istream& is) {
  ReferenceMesh m;
  int nn = 0, ne = 0;
  if (!(is >> m.dim >> m.p >> nn >> ne)) throw io_error("mesh_from_text: bad header");
  const Basis basis(m.dim, m.p);
  m.nodes.resize(nn, m.dim);
  for (int n = 0; n < nn; ++n)
    for (int a = 0; a < m.dim; ++a)
      if (!(is >> m.nodes(n, a))) throw io_error("mesh_from_text: bad node line");
  m.elems.resize(ne, basis.np);
  for (int e = 0; e < ne; ++e)
    for (int i = 0; i < basis.np; ++i)
      if (!(is >> m.elems(e, i))) throw io_error("mesh_from_text: bad element line");
  BoundaryFace bf;
  while (is >> bf.elem >> bf.local_face >> bf.tag) m.boundary.push_back(bf);
  finalize_h0(m);
  return m;
}

inline void write_mesh(const std::string& path, const ReferenceMesh& mesh) {
  std::ofstream os(path);
  if (!os) throw io_error("write_mesh: cannot open " + path);
  os << mesh_to_text(mesh);
}

inline ReferenceMesh read_mesh(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("read_mesh: cannot open " + path);
  return mesh_from_text(is);
}

// ---------------------------------------------------------------------------
// Field dump: physical mesh plus element-major per-node state values.
//   dim p n_nodes n_elems n_comp
//   <n_nodes physical coordinate lines>
//   <n_elems connectivity lines>
//   <n_elems*np state lines with n_comp entries each>
// ---------------------------------------------------------------------------
struct FieldDump {
  int dim = 1, p = 1, n_comp = 1;
  RowMat coords;          // physical node coordinates
  Eigen::MatrixXi elems;  // connectivity
  Vec state;              // element-major [(e*np+i)*nc+c]
};

inline std::string field_to_text(const ReferenceMesh& mesh, const MeshDofs& dofs, const Vec& u,
                                 int n_comp) {
  std::ostringstream os;
  const int np = mesh.np();
  os << mesh.dim << ' ' << mesh.p << ' ' << mesh.n_nodes() << ' ' << mesh.n_elems() << ' '
     << n_comp << '\n';
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    for (int a = 0; a < mesh.dim; ++a) os << (a ? " " : "") << fmt_double(dofs.coords(n, a));
    os << '\n';
  }
  for (int e = 0; e < mesh.n_elems(); ++e) {
    for (int i = 0; i < np; ++i) os << (i ? " " : "") << mesh.elems(e, i);
    os << '\n';
  }
  for (int e = 0; e < mesh.n_elems(); ++e)
    for (int i = 0; i < np; ++i) {
      for (int c = 0; c < n_comp; ++c)
        os << (c ? " " : "") << fmt_double(u((e * np + i) * n_comp + c));
      os << '\n';
    }
  return os.str();
}

inline FieldDump field_from_text(std::istream& is) {
  FieldDump f;
  int nn = 0, ne = 0;
  if (!(is >> f.dim >> f.p >> nn >> ne >> f.n_comp)) throw io_error("field_from_text: bad header");
  const Basis basis(f.dim, f.p);
  f.coords.resize(nn, f.dim);
  for (int n = 0; n < nn; ++n)
    for (int a = 0; a < f.dim; ++a) is >> f.coords(n, a);
  f.elems.resize(ne, basis.np);
  for (int e = 0; e < ne; ++e)
    for (int i = 0; i < basis.np; ++i) is >> f.elems(e, i);
  f.state.resize(ne * basis.np * f.n_comp);
  for (int k = 0; k < f.state.size(); ++k)
    if (!(is >> f.state(k))) throw io_error("field_from_text: bad state line");
  return f;
}

inline void write_field(const std::string& path, const ReferenceMesh& mesh, const MeshDofs& dofs,
                        const Vec& u, int n_comp) {
  std::ofstream os(path);
  if (!os) throw io_error("write_field: cannot open " + path);
  os << field_to_text(mesh, dofs, u, n_comp);
}

inline FieldDump read_field(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("read_field: cannot open " + path);
  return field_from_text(is);
}

// ---------------------------------------------------------------------------
// CSV: first row is the header; all numeric cells via fmt_double.
// ---------------------------------------------------------------------------
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> cells) { rows.push_back(std::move(cells)); }
  std::string to_text() const {
    std::ostringstream os;
    for (size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    for (const auto& r : rows) {
      for (size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << '\n';
    }
    return os.str();
  }
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw io_error("write_text: cannot open " + path);
  os << text;
}

// ---------------------------------------------------------------------------
// Minimal SVG line plots (no external plotting dependency).
// ---------------------------------------------------------------------------
struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
};

inline std::string svg_line_plot(const std::vector<SvgSeries>& series, bool logx, bool logy,
                                 const std::string& title = "") {
  const int W = 640, H = 480, ml = 60, mr = 20, mt = 30, mb = 45;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  auto tx = [&](double v) { return logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return logy ? std::log10(v) : v; };
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (logy && !(s.y[i] > 0.0)) continue;
      xmin = std::min(xmin, tx(s.x[i]));
      xmax = std::max(xmax, tx(s.x[i]));
      ymin = std::min(ymin, ty(s.y[i]));
      ymax = std::max(ymax, ty(s.y[i]));
    }
  if (!(xmax > xmin)) { xmax = xmin + 1.0; }
  if (!(ymax > ymin)) { ymax = ymin + 1.0; }
  auto px = [&](double v) { return ml + (tx(v) - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto py = [&](double v) { return H - mb - (ty(v) - ymin) / (ymax - ymin) * (H - mt - mb); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                 "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\">\n";
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << (W - ml - mr) << "\" height=\""
     << (H - mt - mb) << "\" fill=\"none\" stroke=\"black\"/>\n";
  if (!title.empty())
    os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
  int ci = 0;
  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << colors[ci % 8] << "\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (logy && !(s.y[i] > 0.0)) continue;
      os << fmt_double(px(s.x[i])) << ',' << fmt_double(py(s.y[i])) << ' ';
    }
    os << "\"/>\n";
    os << "<text x=\"" << (W - mr - 150) << "\" y=\"" << (mt + 16 + 14 * ci) << "\" fill=\""
       << colors[ci % 8] << "\">" << s.label << "</text>\n";
    ++ci;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace dgtrack
