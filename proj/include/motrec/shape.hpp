#pragma once

#include <Eigen/Dense>
#include <array>
#include <filesystem>
#include <vector>

#include "motrec/geometry.hpp"

namespace motrec {

/// Componentwise arithmetic mean of latent shape codes. All codes must share
/// one length; an empty list is an error.
Eigen::VectorXd fuse_codes(const std::vector<Eigen::VectorXd>& codes);

/// Signed-distance oracle over the canonical cube [-0.5,0.5]^3. Negative
/// inside the object, positive outside, distances in canonical units.
class SdfDecoder {
 public:
  virtual ~SdfDecoder() = default;
  virtual double evaluate(const Eigen::VectorXd& code,
                          const Eigen::Vector3d& point) const = 0;
};

/// Sphere centred at the origin; code[0] is the radius.
class SphereDecoder : public SdfDecoder {
 public:
  double evaluate(const Eigen::VectorXd& code,
                  const Eigen::Vector3d& point) const override;
};

/// Axis-aligned ellipsoid; code[0..2] are the semi-axes. Exact on the axes,
/// elsewhere the usual first-order bound (continuous, correct sign).
class EllipsoidDecoder : public SdfDecoder {
 public:
  double evaluate(const Eigen::VectorXd& code,
                  const Eigen::Vector3d& point) const override;
};

/// Truncated signed distances sampled at the voxel centres of the canonical
/// cube. Cubic layout, x fastest: values[(k*res + j)*res + i].
struct TsdfGrid {
  int resolution = 0;
  double truncation = 0.1;
  std::vector<double> values;

  double& at(int i, int j, int k) {
    return values[(static_cast<std::size_t>(k) * resolution + j) * resolution +
                  i];
  }
  double at(int i, int j, int k) const {
    return values[(static_cast<std::size_t>(k) * resolution + j) * resolution +
                  i];
  }

  /// Centre of voxel (i,j,k): each coordinate is -0.5 + (index + 0.5) / res.
  static Eigen::Vector3d voxel_center(int i, int j, int k, int res);
};

/// Table-driven decoder backed by a precomputed SDF grid file; the latent
/// code is ignored. Samples by trilinear interpolation between voxel
/// centres, clamping outside queries to the border values.
class GridSdfDecoder : public SdfDecoder {
 public:
  explicit GridSdfDecoder(const std::filesystem::path& file);
  explicit GridSdfDecoder(TsdfGrid grid);

  double evaluate(const Eigen::VectorXd& code,
                  const Eigen::Vector3d& point) const override;
  const TsdfGrid& grid() const { return grid_; }

 private:
  TsdfGrid grid_;
};

/// Samples the decoder at every voxel centre and clamps to +-truncation.
/// resolution must be at least 8.
TsdfGrid decode_tsdf(const SdfDecoder& decoder, const Eigen::VectorXd& code,
                     int resolution, double truncation = 0.1);

enum class MeshFrame { kCanonical, kWorld };

struct TriMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> triangles;
  MeshFrame frame = MeshFrame::kCanonical;
};

/// Zero level set of the grid as a triangle mesh, canonical frame. Vertices
/// are linearly interpolated along sign-change edges and shared between
/// neighbouring cells, so the surface of a closed shape is watertight.
/// Returns an empty mesh when the grid has no sign change.
TriMesh marching_cubes(const TsdfGrid& g);

/// v -> R * (S * v) + t with S = diag(s) applied in the object frame.
TriMesh place_in_world(const TriMesh& m, const Pose& t_wo, const Scale& s);

/// Row-major depth map in meters; 0 marks pixels with no surface.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  float at(int x, int y) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }
  float& at(int x, int y) {
    return values[static_cast<std::size_t>(y) * width + x];
  }
};

/// Z-buffer rasterisation of world-frame meshes into the camera at t_wc
/// (camera-to-world). Perspective-correct interpolation, nearest surface
/// wins, back faces included. Pixel (x,y) samples at (x+0.5, y+0.5).
DepthImage render_depth(const std::vector<TriMesh>& meshes, const Pose& t_wc,
                        const CameraIntrinsics& k, int width, int height);

/// ASCII PLY with float vertex properties and integer face lists.
void write_ply(const std::filesystem::path& path, const TriMesh& mesh);

/// Raw depth file: uint32 width, uint32 height, then width*height float32
/// values row-major, all little-endian.
void write_depth_raw(const std::filesystem::path& path, const DepthImage& img);
DepthImage read_depth_raw(const std::filesystem::path& path);

/// Plain PGM (P2) preview, depth scaled to [0, 65535] by the image maximum.
void write_depth_pgm(const std::filesystem::path& path, const DepthImage& img);

/// SDF grid file: uint32 per-axis resolution, float32 truncation, then
/// res^3 float32 values in grid layout, all little-endian.
void write_sdf_grid(const std::filesystem::path& path, const TsdfGrid& grid);
TsdfGrid read_sdf_grid(const std::filesystem::path& path);

}  // namespace motrec
