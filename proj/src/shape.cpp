#include "motrec/shape.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace motrec {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary file formats assume a little-endian host");

[[noreturn]] void fail_file(const std::filesystem::path& path,
                            const std::string& what) {
  throw std::runtime_error(path.string() + ": " + what);
}

}  // namespace

Eigen::VectorXd fuse_codes(const std::vector<Eigen::VectorXd>& codes) {
  if (codes.empty())
    throw std::invalid_argument("fuse_codes: empty code list");
  Eigen::VectorXd sum = codes.front();
  for (std::size_t i = 1; i < codes.size(); ++i) {
    if (codes[i].size() != sum.size())
      throw std::invalid_argument("fuse_codes: mixed code lengths");
    sum += codes[i];
  }
  return sum / static_cast<double>(codes.size());
}

double SphereDecoder::evaluate(const Eigen::VectorXd& code,
                               const Eigen::Vector3d& point) const {
  if (code.size() < 1 || !(code[0] > 0.0))
    throw std::invalid_argument("sphere decoder needs a positive radius");
  return point.norm() - code[0];
}

double EllipsoidDecoder::evaluate(const Eigen::VectorXd& code,
                                  const Eigen::Vector3d& point) const {
  if (code.size() < 3 || !(code[0] > 0.0) || !(code[1] > 0.0) ||
      !(code[2] > 0.0))
    throw std::invalid_argument("ellipsoid decoder needs positive semi-axes");
  const Eigen::Vector3d axes = code.head<3>();
  const double k1 = (point.array() / axes.array().square()).matrix().norm();
  if (k1 < 1e-300) return -axes.minCoeff();
  const double k0 = (point.array() / axes.array()).matrix().norm();
  return k0 * (k0 - 1.0) / k1;
}

Eigen::Vector3d TsdfGrid::voxel_center(int i, int j, int k, int res) {
  const double step = 1.0 / res;
  return {-0.5 + (i + 0.5) * step, -0.5 + (j + 0.5) * step,
          -0.5 + (k + 0.5) * step};
}

GridSdfDecoder::GridSdfDecoder(const std::filesystem::path& file)
    : grid_(read_sdf_grid(file)) {}

GridSdfDecoder::GridSdfDecoder(TsdfGrid grid) : grid_(std::move(grid)) {
  const auto n = static_cast<std::size_t>(grid_.resolution);
  if (grid_.resolution < 1 || grid_.values.size() != n * n * n)
    throw std::invalid_argument("grid decoder: inconsistent grid");
}

double GridSdfDecoder::evaluate(const Eigen::VectorXd& /*code*/,
                                const Eigen::Vector3d& point) const {
  const int res = grid_.resolution;
  if (res == 1) return grid_.values[0];
  double frac[3];
  int base[3];
  for (int a = 0; a < 3; ++a) {
    // Continuous index: voxel centre i sits at coordinate i.
    const double q = (point[a] + 0.5) * res - 0.5;
    const double lo = std::clamp(std::floor(q), 0.0, res - 2.0);
    base[a] = static_cast<int>(lo);
    frac[a] = std::clamp(q - lo, 0.0, 1.0);
  }
  double value = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    const double w = (dx ? frac[0] : 1.0 - frac[0]) *
                     (dy ? frac[1] : 1.0 - frac[1]) *
                     (dz ? frac[2] : 1.0 - frac[2]);
    value += w * grid_.at(base[0] + dx, base[1] + dy, base[2] + dz);
  }
  return value;
}

TsdfGrid decode_tsdf(const SdfDecoder& decoder, const Eigen::VectorXd& code,
                     int resolution, double truncation) {
  if (resolution < 8)
    throw std::invalid_argument("decode_tsdf: resolution must be >= 8");
  if (!(truncation > 0.0))
    throw std::invalid_argument("decode_tsdf: truncation must be positive");
  TsdfGrid g;
  g.resolution = resolution;
  g.truncation = truncation;
  g.values.resize(static_cast<std::size_t>(resolution) * resolution *
                  resolution);
  for (int k = 0; k < resolution; ++k)
    for (int j = 0; j < resolution; ++j)
      for (int i = 0; i < resolution; ++i) {
        const double d = decoder.evaluate(
            code, TsdfGrid::voxel_center(i, j, k, resolution));
        g.at(i, j, k) = std::clamp(d, -truncation, truncation);
      }
  return g;
}

namespace {

// Cube corner c occupies offset (c&1, c>>1&1, c>>2&1). Edges are grouped by
// axis: 0..3 along x, 4..7 along y, 8..11 along z, each listed as
// (lower corner, upper corner).
constexpr int kEdgeCorner[12][2] = {
    {0, 1}, {2, 3}, {4, 5}, {6, 7}, {0, 2}, {1, 3},
    {4, 6}, {5, 7}, {0, 4}, {1, 5}, {2, 6}, {3, 7},
};

int edge_between(int a, int b) {
  for (int e = 0; e < 12; ++e)
    if ((kEdgeCorner[e][0] == a && kEdgeCorner[e][1] == b) ||
        (kEdgeCorner[e][0] == b && kEdgeCorner[e][1] == a))
      return e;
  return -1;
}

// Trilinear gradient of the cell's corner values at unit-cube point p.
Eigen::Vector3d cell_gradient(const double val[8], const Eigen::Vector3d& p) {
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  for (int c = 0; c < 8; ++c) {
    const double wx = (c & 1) ? p.x() : 1.0 - p.x();
    const double wy = (c & 2) ? p.y() : 1.0 - p.y();
    const double wz = (c & 4) ? p.z() : 1.0 - p.z();
    const double sx = (c & 1) ? 1.0 : -1.0;
    const double sy = (c & 2) ? 1.0 : -1.0;
    const double sz = (c & 4) ? 1.0 : -1.0;
    g.x() += val[c] * sx * wy * wz;
    g.y() += val[c] * wx * sy * wz;
    g.z() += val[c] * wx * wy * sz;
  }
  return g;
}

}  // namespace

TriMesh marching_cubes(const TsdfGrid& g) {
  const int res = g.resolution;
  const auto n = static_cast<std::size_t>(std::max(res, 0));
  if (res < 1 || g.values.size() != n * n * n)
    throw std::invalid_argument("marching_cubes: inconsistent grid");

  TriMesh mesh;
  mesh.frame = MeshFrame::kCanonical;
  if (res < 2) return mesh;

  // Face corners in cyclic order, plus the edge between each adjacent pair.
  struct Face {
    int corner[4];
    int edge[4];
  };
  std::array<Face, 6> faces;
  {
    int fi = 0;
    for (int axis = 0; axis < 3; ++axis) {
      const int u = (axis == 0) ? 1 : 0;
      const int v = (axis == 2) ? 1 : 2;
      for (int side = 0; side < 2; ++side) {
        Face& f = faces[fi++];
        const int base = side << axis;
        f.corner[0] = base;
        f.corner[1] = base | (1 << u);
        f.corner[2] = base | (1 << u) | (1 << v);
        f.corner[3] = base | (1 << v);
        for (int i = 0; i < 4; ++i)
          f.edge[i] = edge_between(f.corner[i], f.corner[(i + 1) % 4]);
      }
    }
  }

  // One shared vertex per cut grid edge, keyed by (axis, lower grid point).
  std::unordered_map<std::int64_t, int> edge_vertex;
  const auto vertex_for = [&](int axis, int gi, int gj, int gk) {
    const std::int64_t key =
        ((static_cast<std::int64_t>(axis) * res + gk) * res + gj) * res + gi;
    const auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;
    int hi = gi, hj = gj, hk = gk;
    (axis == 0 ? hi : axis == 1 ? hj : hk) += 1;
    const double va = g.at(gi, gj, gk);
    const double vb = g.at(hi, hj, hk);
    const double t = std::clamp(va / (va - vb), 0.0, 1.0);
    const Eigen::Vector3d pa = TsdfGrid::voxel_center(gi, gj, gk, res);
    const Eigen::Vector3d pb = TsdfGrid::voxel_center(hi, hj, hk, res);
    const int idx = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(pa + t * (pb - pa));
    edge_vertex.emplace(key, idx);
    return idx;
  };

  for (int ck = 0; ck + 1 < res; ++ck)
    for (int cj = 0; cj + 1 < res; ++cj)
      for (int ci = 0; ci + 1 < res; ++ci) {
        double val[8];
        bool inside[8];
        int inside_count = 0;
        for (int c = 0; c < 8; ++c) {
          val[c] = g.at(ci + (c & 1), cj + ((c >> 1) & 1),
                        ck + ((c >> 2) & 1));
          inside[c] = val[c] < 0.0;
          inside_count += inside[c];
        }
        if (inside_count == 0 || inside_count == 8) continue;

        // Surface/face intersection segments, one pair of cut edges each.
        // On an ambiguous face (both diagonals cut) the segments isolate
        // the inside corners; the rule sees only face data, so the two
        // cells sharing the face always agree and the mesh stays closed.
        int nbr[12][2];
        int deg[12] = {0};
        for (const Face& f : faces) {
          int cut_pos[4];
          int cuts = 0;
          for (int i = 0; i < 4; ++i) {
            const int a = f.corner[i], b = f.corner[(i + 1) % 4];
            if (inside[a] != inside[b]) cut_pos[cuts++] = i;
          }
          const auto add = [&](int pa, int pb) {
            const int ea = f.edge[pa], eb = f.edge[pb];
            nbr[ea][deg[ea]++] = eb;
            nbr[eb][deg[eb]++] = ea;
          };
          if (cuts == 2) {
            add(cut_pos[0], cut_pos[1]);
          } else if (cuts == 4) {
            if (inside[f.corner[0]]) {
              add(3, 0);
              add(1, 2);
            } else {
              add(0, 1);
              add(2, 3);
            }
          }
        }

        // Cut edges form disjoint closed loops; walk each one.
        bool used[12] = {false};
        for (int e0 = 0; e0 < 12; ++e0) {
          if (deg[e0] == 0 || used[e0]) continue;
          int loop[12];
          int len = 0;
          int prev = -1, cur = e0;
          do {
            loop[len++] = cur;
            used[cur] = true;
            const int nxt = (nbr[cur][0] == prev) ? nbr[cur][1] : nbr[cur][0];
            prev = cur;
            cur = nxt;
          } while (cur != e0);
          if (len < 3) continue;

          int vid[12];
          for (int i = 0; i < len; ++i) {
            const int e = loop[i];
            const int lo = kEdgeCorner[e][0];
            vid[i] = vertex_for(e / 4, ci + (lo & 1), cj + ((lo >> 1) & 1),
                                ck + ((lo >> 2) & 1));
          }

          Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
          for (int i = 0; i < len; ++i) centroid += mesh.vertices[vid[i]];
          centroid /= len;
          const Eigen::Vector3d origin =
              TsdfGrid::voxel_center(ci, cj, ck, res);
          const Eigen::Vector3d grad =
              cell_gradient(val, (centroid - origin) * res);

          for (int i = 1; i + 1 < len; ++i) {
            int a = vid[0], b = vid[i], c = vid[i + 1];
            if (a == b || b == c || a == c) continue;
            const Eigen::Vector3d ab = mesh.vertices[b] - mesh.vertices[a];
            const Eigen::Vector3d ac = mesh.vertices[c] - mesh.vertices[a];
            const Eigen::Vector3d normal = ab.cross(ac);
            if (0.5 * normal.norm() < 1e-12) continue;
            if (normal.dot(grad) < 0.0) std::swap(b, c);
            mesh.triangles.push_back({a, b, c});
          }
        }
      }
  return mesh;
}

TriMesh place_in_world(const TriMesh& m, const Pose& t_wo, const Scale& s) {
  TriMesh out;
  out.vertices.reserve(m.vertices.size());
  const Eigen::Vector3d scale = s.vec();
  for (const Eigen::Vector3d& v : m.vertices)
    out.vertices.push_back(t_wo.apply(scale.cwiseProduct(v)));
  out.triangles = m.triangles;
  out.frame = MeshFrame::kWorld;
  return out;
}

namespace {

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

void raster_triangle(DepthImage& img, const CameraIntrinsics& k,
                     std::array<Eigen::Vector3d, 3> cam) {
  Eigen::Vector2d q[3];
  double inv_z[3];
  for (int i = 0; i < 3; ++i) {
    inv_z[i] = 1.0 / cam[i].z();
    q[i] = {k.fx * cam[i].x() * inv_z[i] + k.cx,
            k.fy * cam[i].y() * inv_z[i] + k.cy};
  }
  double area = cross2(q[1] - q[0], q[2] - q[0]);
  if (std::abs(area) < 1e-12) return;
  if (area < 0.0) {
    std::swap(q[1], q[2]);
    std::swap(inv_z[1], inv_z[2]);
    area = -area;
  }

  const double min_x = std::min({q[0].x(), q[1].x(), q[2].x()});
  const double max_x = std::max({q[0].x(), q[1].x(), q[2].x()});
  const double min_y = std::min({q[0].y(), q[1].y(), q[2].y()});
  const double max_y = std::max({q[0].y(), q[1].y(), q[2].y()});
  const int x0 = std::max(0, static_cast<int>(std::ceil(min_x - 0.5)));
  const int x1 = std::min(img.width - 1,
                          static_cast<int>(std::floor(max_x - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(min_y - 0.5)));
  const int y1 = std::min(img.height - 1,
                          static_cast<int>(std::floor(max_y - 0.5)));

  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const Eigen::Vector2d p(x + 0.5, y + 0.5);
      const double w0 = cross2(q[2] - q[1], p - q[1]);
      const double w1 = cross2(q[0] - q[2], p - q[2]);
      const double w2 = cross2(q[1] - q[0], p - q[0]);
      if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
      const double iz =
          (w0 * inv_z[0] + w1 * inv_z[1] + w2 * inv_z[2]) / area;
      if (!(iz > 0.0)) continue;
      const float depth = static_cast<float>(1.0 / iz);
      float& slot = img.at(x, y);
      if (slot == 0.0f || depth < slot) slot = depth;
    }
}

}  // namespace

DepthImage render_depth(const std::vector<TriMesh>& meshes, const Pose& t_wc,
                        const CameraIntrinsics& k, int width, int height) {
  if (width <= 0 || height <= 0)
    throw std::invalid_argument("render_depth: image dimensions");
  DepthImage img;
  img.width = width;
  img.height = height;
  img.values.assign(static_cast<std::size_t>(width) * height, 0.0f);

  constexpr double kNear = 1e-6;
  const Pose t_cw = inverse(t_wc);
  for (const TriMesh& mesh : meshes)
    for (const auto& tri : mesh.triangles) {
      std::array<Eigen::Vector3d, 3> cam;
      for (int i = 0; i < 3; ++i)
        cam[i] = t_cw.apply(mesh.vertices[tri[i]]);

      // Clip against the near plane; the survivor is a triangle or a quad.
      Eigen::Vector3d poly[4];
      int n = 0;
      for (int i = 0; i < 3; ++i) {
        const Eigen::Vector3d& a = cam[i];
        const Eigen::Vector3d& b = cam[(i + 1) % 3];
        const bool ia = a.z() > kNear, ib = b.z() > kNear;
        if (ia) poly[n++] = a;
        if (ia != ib) {
          const double t = (kNear - a.z()) / (b.z() - a.z());
          poly[n++] = a + t * (b - a);
        }
      }
      for (int i = 1; i + 1 < n; ++i)
        raster_triangle(img, k, {poly[0], poly[i], poly[i + 1]});
    }
  return img;
}

void write_ply(const std::filesystem::path& path, const TriMesh& mesh) {
  std::ofstream out(path);
  if (!out) fail_file(path, "cannot open for writing");
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << mesh.vertices.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "element face " << mesh.triangles.size() << "\n";
  out << "property list uchar int vertex_indices\nend_header\n";
  out.precision(9);
  for (const Eigen::Vector3d& v : mesh.vertices)
    out << static_cast<float>(v.x()) << " " << static_cast<float>(v.y())
        << " " << static_cast<float>(v.z()) << "\n";
  for (const auto& t : mesh.triangles)
    out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  if (!out) fail_file(path, "write failed");
}

void write_depth_raw(const std::filesystem::path& path,
                     const DepthImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_file(path, "cannot open for writing");
  const std::uint32_t header[2] = {static_cast<std::uint32_t>(img.width),
                                   static_cast<std::uint32_t>(img.height)};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(img.values.data()),
            static_cast<std::streamsize>(img.values.size() * sizeof(float)));
  if (!out) fail_file(path, "write failed");
}

DepthImage read_depth_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_file(path, "cannot open");
  std::uint32_t header[2];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in) fail_file(path, "truncated depth header");
  DepthImage img;
  img.width = static_cast<int>(header[0]);
  img.height = static_cast<int>(header[1]);
  if (img.width < 0 || img.height < 0 || header[0] > 1u << 16 ||
      header[1] > 1u << 16)
    fail_file(path, "implausible depth dimensions");
  img.values.resize(static_cast<std::size_t>(img.width) * img.height);
  in.read(reinterpret_cast<char*>(img.values.data()),
          static_cast<std::streamsize>(img.values.size() * sizeof(float)));
  if (!in) fail_file(path, "truncated depth payload");
  return img;
}

void write_depth_pgm(const std::filesystem::path& path,
                     const DepthImage& img) {
  float max_depth = 0.0f;
  for (float v : img.values) max_depth = std::max(max_depth, v);
  std::ofstream out(path);
  if (!out) fail_file(path, "cannot open for writing");
  out << "P2\n" << img.width << " " << img.height << "\n65535\n";
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const float v = img.at(x, y);
      const long grey =
          max_depth > 0.0f ? std::lround(v / max_depth * 65535.0) : 0;
      out << grey << (x + 1 == img.width ? "\n" : " ");
    }
  }
  if (!out) fail_file(path, "write failed");
}

void write_sdf_grid(const std::filesystem::path& path, const TsdfGrid& grid) {
  const auto res = static_cast<std::uint32_t>(grid.resolution);
  const auto n = static_cast<std::size_t>(grid.resolution);
  if (grid.resolution < 1 || grid.values.size() != n * n * n)
    throw std::invalid_argument("write_sdf_grid: inconsistent grid");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_file(path, "cannot open for writing");
  const float truncation = static_cast<float>(grid.truncation);
  out.write(reinterpret_cast<const char*>(&res), sizeof(res));
  out.write(reinterpret_cast<const char*>(&truncation), sizeof(truncation));
  std::vector<float> payload(grid.values.begin(), grid.values.end());
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!out) fail_file(path, "write failed");
}

TsdfGrid read_sdf_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_file(path, "cannot open");
  std::uint32_t res = 0;
  float truncation = 0.0f;
  in.read(reinterpret_cast<char*>(&res), sizeof(res));
  in.read(reinterpret_cast<char*>(&truncation), sizeof(truncation));
  if (!in) fail_file(path, "truncated sdf header");
  if (res < 1 || res > 4096) fail_file(path, "implausible sdf resolution");
  if (!(truncation > 0.0f)) fail_file(path, "truncation must be positive");
  TsdfGrid grid;
  grid.resolution = static_cast<int>(res);
  grid.truncation = truncation;
  std::vector<float> payload(static_cast<std::size_t>(res) * res * res);
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!in) fail_file(path, "truncated sdf payload");
  grid.values.assign(payload.begin(), payload.end());
  return grid;
}

}  // namespace motrec
