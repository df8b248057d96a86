#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

namespace qoip {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Oriented skeleton edge. For interior faces elem[0] < elem[1] and the unit
/// normal points from elem[0] into elem[1]; for boundary faces elem[1] = -1
/// and the normal points out of the domain.
struct Face {
  std::array<int, 2> verts;  // global vertex indices, verts[0] < verts[1]
  std::array<int, 2> elem;   // adjacent elements, elem[1] = -1 on boundary
  Vec2 normal;
  double length = 0.0;
  Vec2 midpoint;
  bool boundary = false;
};

/// Conforming 2D triangulation with a fully enumerated skeleton.
/// Immutable after construction; refinement returns a new mesh.
class Mesh {
 public:
  static Mesh build(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> elements,
                    std::vector<std::string>* warnings = nullptr);

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_elements() const { return static_cast<int>(elements_.size()); }
  int num_faces() const { return static_cast<int>(faces_.size()); }
  int num_interior_faces() const { return num_interior_faces_; }

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& elements() const { return elements_; }
  const std::vector<Face>& faces() const { return faces_; }
  const Vec2& vertex(int v) const { return vertices_[v]; }
  const std::array<int, 3>& element(int k) const { return elements_[k]; }
  const Face& face(int f) const { return faces_[f]; }

  /// Face indices of element k; entry i is the edge opposite local vertex i.
  const std::array<int, 3>& element_faces(int k) const { return element_faces_[k]; }
  /// +1 if the stored face normal is outward for element k, else -1.
  const std::array<int, 3>& element_face_signs(int k) const { return element_face_signs_[k]; }

  /// -1 for boundary faces; otherwise the index into the interior-face list.
  int interior_face_index(int f) const { return interior_face_index_[f]; }
  const std::vector<int>& interior_faces() const { return interior_faces_; }

  double area(int k) const { return area_[k]; }
  double diameter(int k) const { return diameter_[k]; }
  double inball(int k) const { return inball_[k]; }  // rho_K = 2*area/perimeter
  Vec2 centroid(int k) const;

  double gamma() const { return gamma_; }
  double h_max() const { return h_max_; }
  double total_area() const { return total_area_; }

  bool vertex_on_boundary(int v) const { return vertex_on_boundary_[v]; }

  /// Physical point of barycentric coordinates (l0,l1,l2) on element k.
  Vec2 point(int k, const Vec3& bary) const;
  /// Barycentric coordinates of x with respect to element k.
  Vec3 barycentric(int k, const Vec2& x) const;
  /// Constant gradients of the three barycentric coordinate functions of k.
  const std::array<Vec2, 3>& bary_gradients(int k) const { return bary_grads_[k]; }

 private:
  std::vector<Vec2> vertices_;
  std::vector<std::array<int, 3>> elements_;
  std::vector<Face> faces_;
  std::vector<std::array<int, 3>> element_faces_;
  std::vector<std::array<int, 3>> element_face_signs_;
  std::vector<int> interior_face_index_;
  std::vector<int> interior_faces_;
  std::vector<double> area_, diameter_, inball_;
  std::vector<std::array<Vec2, 3>> bary_grads_;
  std::vector<bool> vertex_on_boundary_;
  int num_interior_faces_ = 0;
  double gamma_ = 0.0, h_max_ = 0.0, total_area_ = 0.0;
};

/// 2n^2 triangles on the unit square, each grid cell split along the
/// lower-left to upper-right diagonal.
Mesh build_structured_unit_square(int n);

/// Red refinement: every triangle split into four by edge midpoints.
Mesh refine_uniform(const Mesh& mesh);

/// Text format: "nv ne" then nv lines "x y" then ne lines "i j k".
Mesh load_mesh(const std::string& path, std::vector<std::string>* warnings = nullptr);
void save_mesh(const Mesh& mesh, const std::string& path);

/// List of violated mesh invariants (empty on success).
std::vector<std::string> validate(const Mesh& mesh);

}  // namespace qoip
