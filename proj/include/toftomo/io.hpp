#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "toftomo/bootstrap.hpp"
#include "toftomo/fitting.hpp"
#include "toftomo/imaging.hpp"
#include "toftomo/mle.hpp"
#include "toftomo/scenario.hpp"

namespace toftomo::io {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// Writes to a sibling temp file and renames it over the target; parent directories are created.
void write_atomic(const fs::path& path, const std::string& content);
std::string read_text(const fs::path& path);

// Numbers are written with 17 significant digits so reading back is exact.
std::string format_double(double v);

// Grid CSV plus "<path>.meta" with magnification, flight_time_s, exposure_s, pixel_pitch_m, n_averaged.
void write_image(const fs::path& path, const ImageFrame& frame);
ImageFrame read_image(const fs::path& path);

// CSV with header theta_rad,u,weight.
std::string quadrature_csv(const std::vector<BinnedQuadrature>& per_angle);
void write_quadrature(const fs::path& path, const std::vector<BinnedQuadrature>& per_angle);
void write_quadrature(const fs::path& path, const QuadratureDataset& data);
// Bin width is the smallest u spacing within an angle.
QuadratureDataset read_quadrature(const fs::path& path);
std::vector<BinnedQuadrature> read_binned(const fs::path& path);

// CSV t_s,value[,error].
void write_time_series(const fs::path& path, const TimeSeries& series);
TimeSeries read_time_series(const fs::path& path);

json density_json(const DensityMatrix& rho);
DensityMatrix density_from_json(const json& j);
json mle_json(const MleResult& r);
DensityMatrix read_density(const fs::path& path);

// Long format x,p,w.
std::string wigner_csv(const WignerGrid& w);
// m,n,real,imag,magnitude,phase_rad; square areas scale with magnitude.
std::string hinton_csv(const DensityMatrix& rho);

json fit_json(const FitResult& r);
json bootstrap_json(const BootstrapReport& r, bool include_replicas = false);
json noise_bias_json(const NoiseBiasTable& t);
std::string noise_bias_csv(const NoiseBiasTable& t);
std::string robustness_csv(const RobustnessMap& m);

std::string dump(const json& j);

}  // namespace toftomo::io
