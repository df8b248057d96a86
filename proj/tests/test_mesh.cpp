#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "qoip/error.hpp"
#include "qoip/mesh.hpp"

using namespace qoip;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = "/tmp/" + name;
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("structured unit square counts") {
  const Mesh m1 = build_structured_unit_square(1);
  CHECK(m1.num_elements() == 2);
  CHECK(m1.num_vertices() == 4);
  CHECK(m1.num_faces() == 5);
  CHECK(m1.num_interior_faces() == 1);

  const Mesh m2 = build_structured_unit_square(2);
  CHECK(m2.num_elements() == 8);
  CHECK(m2.num_vertices() == 9);
  CHECK(m2.num_faces() == 16);
  CHECK(m2.num_interior_faces() == 8);

  CHECK_THROWS_AS(build_structured_unit_square(0), Error);
}

TEST_CASE("even meshes align with x = 1/2") {
  const Mesh m = build_structured_unit_square(2);
  // the segment {x = 1/2} must be a union of mesh edges
  int on_line = 0;
  for (const Face& f : m.faces()) {
    const Vec2 a = m.vertex(f.verts[0]), b = m.vertex(f.verts[1]);
    if (std::abs(a.x() - 0.5) < 1e-15 && std::abs(b.x() - 0.5) < 1e-15) ++on_line;
  }
  CHECK(on_line == 2);
}

TEST_CASE("face geometry invariants") {
  const Mesh m = build_structured_unit_square(3);
  for (const Face& f : m.faces()) {
    CHECK(std::abs(f.normal.norm() - 1.0) <= 1e-14);
    const Vec2 edge = m.vertex(f.verts[1]) - m.vertex(f.verts[0]);
    CHECK(std::abs(f.normal.dot(edge)) <= 1e-13);
    CHECK(f.length == doctest::Approx(edge.norm()).epsilon(1e-14));
    if (!f.boundary) {
      CHECK(f.elem[0] < f.elem[1]);
      // normal points from the lower to the higher adjacent element
      const Vec2 away = m.centroid(f.elem[1]) - m.centroid(f.elem[0]);
      CHECK(f.normal.dot(away) > 0.0);
    }
  }
  CHECK(validate(m).empty());
}

TEST_CASE("interior faces have matching vertex sets from both elements") {
  const Mesh m = refine_uniform(build_structured_unit_square(2));
  for (const Face& f : m.faces()) {
    if (f.boundary) continue;
    for (int side = 0; side < 2; ++side) {
      const auto& el = m.element(f.elem[side]);
      const std::set<int> ev(el.begin(), el.end());
      CHECK(ev.count(f.verts[0]) == 1);
      CHECK(ev.count(f.verts[1]) == 1);
    }
  }
}

TEST_CASE("red refinement") {
  const Mesh parent = build_structured_unit_square(1);
  const Mesh child = refine_uniform(parent);
  CHECK(child.num_elements() == 8);
  CHECK(child.gamma() == doctest::Approx(parent.gamma()).epsilon(1e-12));
  CHECK(child.h_max() == doctest::Approx(parent.h_max() / 2.0).epsilon(1e-14));
  CHECK(validate(child).empty());

  // element count 2 n^2 4^k and unit total area
  Mesh m = build_structured_unit_square(3);
  for (int k = 1; k <= 2; ++k) {
    m = refine_uniform(m);
    CHECK(m.num_elements() == 18 * (1 << (2 * k)));
    CHECK(m.total_area() == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("mesh text io round trip") {
  const Mesh m = build_structured_unit_square(2);
  const std::string path = "/tmp/qoip_mesh_roundtrip.txt";
  save_mesh(m, path);
  const Mesh m2 = load_mesh(path);
  CHECK(m2.num_elements() == m.num_elements());
  CHECK(m2.num_faces() == m.num_faces());
  CHECK(m2.gamma() == doctest::Approx(m.gamma()).epsilon(1e-14));
  std::remove(path.c_str());
}

TEST_CASE("well formed two triangle file") {
  const auto path = write_temp("qoip_two_tri.txt",
                               "4 2\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n");
  const Mesh m = load_mesh(path);
  CHECK(m.num_interior_faces() == 1);
}

TEST_CASE("clockwise triangle is fixed with a warning") {
  const auto path = write_temp("qoip_cw.txt", "4 2\n0 0\n1 0\n1 1\n0 1\n0 2 1\n0 2 3\n");
  std::vector<std::string> warnings;
  const Mesh m = load_mesh(path, &warnings);
  CHECK(warnings.size() == 1);
  CHECK(warnings[0].find("orientation") != std::string::npos);
  for (int k = 0; k < m.num_elements(); ++k) CHECK(m.area(k) > 0.0);
}

TEST_CASE("hanging node mesh is rejected naming the elements") {
  // one big triangle on the left, two small ones on the right sharing the
  // vertex (1,0.5) that sits inside the big triangle's edge (1,2)
  const auto path = write_temp("qoip_hanging.txt",
                               "5 3\n0 0\n1 0\n1 1\n2 0\n1 0.5\n0 1 2\n1 3 4\n4 3 2\n");
  try {
    load_mesh(path);
    FAIL("expected a conformity error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonconformingMesh);
    CHECK(std::string(e.what()).find("hanging node") != std::string::npos);
    CHECK(std::string(e.what()).find("element") != std::string::npos);
  }
}

TEST_CASE("parse errors carry line numbers") {
  const auto path = write_temp("qoip_bad.txt", "4 2\n0 0\n1 0\nbroken line\n0 1\n0 1 2\n0 2 3\n");
  try {
    load_mesh(path);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find(":4") != std::string::npos);
  }
}

TEST_CASE("barycentric round trip and gradients") {
  const Mesh m = build_structured_unit_square(3);
  for (int k = 0; k < m.num_elements(); ++k) {
    const Vec3 b(0.2, 0.3, 0.5);
    const Vec2 x = m.point(k, b);
    const Vec3 b2 = m.barycentric(k, x);
    CHECK((b - b2).norm() <= 1e-13);
    // gradients of barycentric coordinates sum to zero
    const auto& g = m.bary_gradients(k);
    CHECK((g[0] + g[1] + g[2]).norm() <= 1e-13);
  }
}
