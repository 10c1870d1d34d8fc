#include "toftomo/version.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>
#include <ceres/version.h>

#define TOFTOMO_STR2(x) #x
#define TOFTOMO_STR(x) TOFTOMO_STR2(x)

namespace toftomo {

std::string version() { return TOFTOMO_VERSION; }

std::vector<std::pair<std::string, std::string>> build_versions() {
    return {
        {"toftomo", TOFTOMO_VERSION},
        {"eigen", TOFTOMO_STR(EIGEN_WORLD_VERSION) "." TOFTOMO_STR(EIGEN_MAJOR_VERSION) "." TOFTOMO_STR(
                      EIGEN_MINOR_VERSION)},
        {"ceres", CERES_VERSION_STRING},
        {"boost", TOFTOMO_STR(BOOST_VERSION)},
        {"compiler", __VERSION__},
    };
}

}  // namespace toftomo
