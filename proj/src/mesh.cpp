#include "qoip/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "qoip/error.hpp"

namespace qoip {

namespace {

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

}  // namespace

Mesh Mesh::build(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> elements,
                 std::vector<std::string>* warnings) {
  Mesh m;
  const int nv = static_cast<int>(vertices.size());
  require(nv >= 3, ErrorCode::InvalidArgument, "mesh needs at least 3 vertices");
  for (auto& el : elements) {
    for (int v : el)
      require(v >= 0 && v < nv, ErrorCode::InvalidArgument, "vertex index out of range");
  }

  // Fix clockwise elements; degenerate ones are a hard error.
  for (std::size_t k = 0; k < elements.size(); ++k) {
    auto& el = elements[k];
    const double sa = signed_area(vertices[el[0]], vertices[el[1]], vertices[el[2]]);
    if (sa == 0.0)
      fail(ErrorCode::InvalidArgument, "element " + std::to_string(k) + " is degenerate");
    if (sa < 0.0) {
      std::swap(el[1], el[2]);
      if (warnings)
        warnings->push_back("element " + std::to_string(k) +
                            ": clockwise vertex order, orientation fixed");
    }
  }

  m.vertices_ = std::move(vertices);
  m.elements_ = std::move(elements);
  const int ne = static_cast<int>(m.elements_.size());

  // Skeleton: collect edges keyed by the sorted vertex pair.
  std::map<std::pair<int, int>, int> edge_index;
  m.element_faces_.assign(ne, {-1, -1, -1});
  m.element_face_signs_.assign(ne, {0, 0, 0});
  for (int k = 0; k < ne; ++k) {
    const auto& el = m.elements_[k];
    for (int i = 0; i < 3; ++i) {
      const int a = el[(i + 1) % 3], b = el[(i + 2) % 3];  // edge opposite vertex i
      const auto key = std::minmax(a, b);
      auto it = edge_index.find(key);
      if (it == edge_index.end()) {
        Face f;
        f.verts = {key.first, key.second};
        f.elem = {k, -1};
        m.faces_.push_back(f);
        edge_index.emplace(key, static_cast<int>(m.faces_.size()) - 1);
        m.element_faces_[k][i] = static_cast<int>(m.faces_.size()) - 1;
      } else {
        Face& f = m.faces_[it->second];
        if (f.elem[1] != -1)
          fail(ErrorCode::NonconformingMesh,
               "edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                   ") shared by more than two elements");
        f.elem[1] = k;
        m.element_faces_[k][i] = it->second;
      }
    }
  }

  // Geometry per element.
  m.area_.resize(ne);
  m.diameter_.resize(ne);
  m.inball_.resize(ne);
  m.bary_grads_.resize(ne);
  m.total_area_ = 0.0;
  m.gamma_ = 0.0;
  m.h_max_ = 0.0;
  for (int k = 0; k < ne; ++k) {
    const auto& el = m.elements_[k];
    const Vec2 p0 = m.vertices_[el[0]], p1 = m.vertices_[el[1]], p2 = m.vertices_[el[2]];
    const double a = signed_area(p0, p1, p2);
    m.area_[k] = a;
    m.total_area_ += a;
    const double l0 = (p2 - p1).norm(), l1 = (p0 - p2).norm(), l2 = (p1 - p0).norm();
    m.diameter_[k] = std::max({l0, l1, l2});
    m.inball_[k] = 2.0 * a / (l0 + l1 + l2);
    m.h_max_ = std::max(m.h_max_, m.diameter_[k]);
    m.gamma_ = std::max(m.gamma_, m.diameter_[k] / m.inball_[k]);
    // grad lambda_i = (opposite edge rotated) / (2 area)
    const Vec2 e0 = p2 - p1, e1 = p0 - p2, e2 = p1 - p0;
    m.bary_grads_[k] = {Vec2(-e0.y(), e0.x()) / (2.0 * a), Vec2(-e1.y(), e1.x()) / (2.0 * a),
                        Vec2(-e2.y(), e2.x()) / (2.0 * a)};
  }

  // Face geometry. elem[0] < elem[1] already holds by construction order, but
  // enforce it so the normal convention is index-based, not discovery-based.
  m.interior_face_index_.assign(m.faces_.size(), -1);
  for (std::size_t f = 0; f < m.faces_.size(); ++f) {
    Face& face = m.faces_[f];
    if (face.elem[1] != -1 && face.elem[0] > face.elem[1]) std::swap(face.elem[0], face.elem[1]);
    face.boundary = face.elem[1] == -1;
    const Vec2 pa = m.vertices_[face.verts[0]], pb = m.vertices_[face.verts[1]];
    face.length = (pb - pa).norm();
    face.midpoint = 0.5 * (pa + pb);
    // Outward normal of elem[0] on this edge.
    const auto& el = m.elements_[face.elem[0]];
    int opp = -1;
    for (int i = 0; i < 3; ++i)
      if (el[i] != face.verts[0] && el[i] != face.verts[1]) opp = el[i];
    Vec2 n(pb.y() - pa.y(), pa.x() - pb.x());
    n.normalize();
    if (n.dot(face.midpoint - m.vertices_[opp]) < 0.0) n = -n;
    face.normal = n;
    if (!face.boundary) {
      m.interior_face_index_[f] = static_cast<int>(m.interior_faces_.size());
      m.interior_faces_.push_back(static_cast<int>(f));
    }
  }
  m.num_interior_faces_ = static_cast<int>(m.interior_faces_.size());

  // Face signs per element.
  for (int k = 0; k < ne; ++k)
    for (int i = 0; i < 3; ++i) {
      const Face& f = m.faces_[m.element_faces_[k][i]];
      m.element_face_signs_[k][i] = (f.elem[0] == k) ? +1 : -1;
    }

  m.vertex_on_boundary_.assign(nv, false);
  for (const Face& f : m.faces_)
    if (f.boundary) {
      m.vertex_on_boundary_[f.verts[0]] = true;
      m.vertex_on_boundary_[f.verts[1]] = true;
    }

  // Conformity: no vertex may lie in the interior of another element's edge.
  // (Adjacency counts were already checked during skeleton construction.)
  for (std::size_t f = 0; f < m.faces_.size(); ++f) {
    const Face& face = m.faces_[f];
    const Vec2 pa = m.vertices_[face.verts[0]], pb = m.vertices_[face.verts[1]];
    const Vec2 d = pb - pa;
    const double len2 = d.squaredNorm();
    for (int v = 0; v < nv; ++v) {
      if (v == face.verts[0] || v == face.verts[1]) continue;
      const Vec2 r = m.vertices_[v] - pa;
      const double t = r.dot(d) / len2;
      if (t <= 1e-12 || t >= 1.0 - 1e-12) continue;
      const double dist = std::abs(r.x() * d.y() - r.y() * d.x()) / std::sqrt(len2);
      if (dist < 1e-12 * std::sqrt(len2)) {
        std::string owners = std::to_string(face.elem[0]);
        if (face.elem[1] != -1) owners += "," + std::to_string(face.elem[1]);
        fail(ErrorCode::NonconformingMesh,
             "hanging node: vertex " + std::to_string(v) + " lies inside edge (" +
                 std::to_string(face.verts[0]) + "," + std::to_string(face.verts[1]) +
                 ") of element(s) " + owners);
      }
    }
  }

  return m;
}

Vec2 Mesh::centroid(int k) const {
  const auto& el = elements_[k];
  return (vertices_[el[0]] + vertices_[el[1]] + vertices_[el[2]]) / 3.0;
}

Vec2 Mesh::point(int k, const Vec3& bary) const {
  const auto& el = elements_[k];
  return bary[0] * vertices_[el[0]] + bary[1] * vertices_[el[1]] + bary[2] * vertices_[el[2]];
}

Vec3 Mesh::barycentric(int k, const Vec2& x) const {
  const auto& el = elements_[k];
  const Vec2 p0 = vertices_[el[0]];
  const double a = area_[k];
  const double l1 = signed_area(p0, x, vertices_[el[2]]) / a;
  const double l2 = signed_area(p0, vertices_[el[1]], x) / a;
  return Vec3(1.0 - l1 - l2, l1, l2);
}

Mesh build_structured_unit_square(int n) {
  require(n >= 1, ErrorCode::InvalidArgument, "grid size must be >= 1");
  std::vector<Vec2> verts;
  verts.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      verts.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
  auto vid = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<std::array<int, 3>> elems;
  elems.reserve(static_cast<std::size_t>(2) * n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      elems.push_back({a, b, c});
      elems.push_back({a, c, d});
    }
  return Mesh::build(std::move(verts), std::move(elems));
}

Mesh refine_uniform(const Mesh& mesh) {
  std::vector<Vec2> verts = mesh.vertices();
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    verts.push_back(0.5 * (mesh.vertex(a) + mesh.vertex(b)));
    const int id = static_cast<int>(verts.size()) - 1;
    midpoint.emplace(key, id);
    return id;
  };
  std::vector<std::array<int, 3>> elems;
  elems.reserve(static_cast<std::size_t>(4) * mesh.num_elements());
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const auto& el = mesh.element(k);
    const int m01 = mid(el[0], el[1]), m12 = mid(el[1], el[2]), m20 = mid(el[2], el[0]);
    elems.push_back({el[0], m01, m20});
    elems.push_back({m01, el[1], m12});
    elems.push_back({m20, m12, el[2]});
    elems.push_back({m01, m12, m20});
  }
  return Mesh::build(std::move(verts), std::move(elems));
}

Mesh load_mesh(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::InvalidArgument, "cannot open mesh file: " + path);
  std::string line;
  int lineno = 0;
  auto next_line = [&](const std::string& what) {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r\n") != std::string::npos) return;
    }
    fail(ErrorCode::ParseError, path + ": unexpected end of file while reading " + what);
  };

  next_line("header");
  std::istringstream hdr(line);
  int nv = 0, ne = 0;
  if (!(hdr >> nv >> ne) || nv < 0 || ne < 0)
    fail(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": expected 'nv ne'");
  std::vector<Vec2> verts(nv);
  for (int v = 0; v < nv; ++v) {
    next_line("vertex " + std::to_string(v));
    std::istringstream ls(line);
    if (!(ls >> verts[v].x() >> verts[v].y()))
      fail(ErrorCode::ParseError,
           path + ":" + std::to_string(lineno) + ": expected vertex coordinates 'x y'");
  }
  std::vector<std::array<int, 3>> elems(ne);
  for (int k = 0; k < ne; ++k) {
    next_line("element " + std::to_string(k));
    std::istringstream ls(line);
    if (!(ls >> elems[k][0] >> elems[k][1] >> elems[k][2]))
      fail(ErrorCode::ParseError,
           path + ":" + std::to_string(lineno) + ": expected element indices 'i j k'");
    for (int v : elems[k])
      if (v < 0 || v >= nv)
        fail(ErrorCode::ParseError,
             path + ":" + std::to_string(lineno) + ": vertex index out of range");
  }
  return Mesh::build(std::move(verts), std::move(elems), warnings);
}

void save_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::InvalidArgument, "cannot open for writing: " + path);
  out.precision(17);
  out << mesh.num_vertices() << " " << mesh.num_elements() << "\n";
  for (const auto& v : mesh.vertices()) out << v.x() << " " << v.y() << "\n";
  for (const auto& el : mesh.elements()) out << el[0] << " " << el[1] << " " << el[2] << "\n";
}

std::vector<std::string> validate(const Mesh& mesh) {
  std::vector<std::string> report;
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const auto& el = mesh.element(k);
    const Vec2 a = mesh.vertex(el[0]), b = mesh.vertex(el[1]), c = mesh.vertex(el[2]);
    const double sa =
        0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
    if (sa <= 0.0)
      report.push_back("element " + std::to_string(k) + ": nonpositive signed area");
    if (std::abs(sa - mesh.area(k)) > 1e-13 * std::max(1.0, std::abs(sa)))
      report.push_back("element " + std::to_string(k) + ": stored area mismatch");
  }
  double gamma = 0.0;
  for (int k = 0; k < mesh.num_elements(); ++k)
    gamma = std::max(gamma, mesh.diameter(k) / mesh.inball(k));
  if (std::abs(gamma - mesh.gamma()) > 1e-12 * std::max(1.0, gamma))
    report.push_back("stored shape coefficient differs from recomputed value");
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    const Vec2 edge = mesh.vertex(face.verts[1]) - mesh.vertex(face.verts[0]);
    if (std::abs(face.normal.norm() - 1.0) > 1e-14)
      report.push_back("face " + std::to_string(f) + ": normal not unit");
    if (std::abs(face.normal.dot(edge)) > 1e-12 * edge.norm())
      report.push_back("face " + std::to_string(f) + ": normal not orthogonal to edge");
    if (std::abs(face.length - edge.norm()) > 1e-13)
      report.push_back("face " + std::to_string(f) + ": stored length mismatch");
    const int adj = face.boundary ? 1 : 2;
    int count = 0;
    for (int k = 0; k < mesh.num_elements(); ++k)
      for (int i = 0; i < 3; ++i)
        if (mesh.element_faces(k)[i] == f) ++count;
    if (count != adj)
      report.push_back("face " + std::to_string(f) + ": adjacency count " +
                       std::to_string(count) + " != " + std::to_string(adj));
  }
  return report;
}

}  // namespace qoip
