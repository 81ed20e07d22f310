#include <cmath>
#include <random>
#include <regex>
#include <sstream>

#include "fletcher/problem.hpp"

namespace fletcher {

namespace {

Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) a(i, j) = normal(rng);
  return a;
}

Problem product_block(const std::string& token, double radius) {
  static const std::regex sphere_re(R"(sphere(\d+))");
  static const std::regex stiefel_re(R"(stiefel(\d+)x(\d+))");
  std::smatch m;
  if (std::regex_match(token, m, sphere_re)) {
    const Index n = std::stol(m[1]);
    return make_stiefel(n, 1, radius, zero_cost(n));
  }
  if (std::regex_match(token, m, stiefel_re)) {
    const Index n = std::stol(m[1]);
    const Index p = std::stol(m[2]);
    return make_stiefel(n, p, radius, zero_cost(n * p));
  }
  throw std::invalid_argument("unknown product block '" + token + "' (expected sphere<n> or stiefel<n>x<p>)");
}

}  // namespace

std::vector<std::string> builtin_ids() { return {"sphere", "rayleigh", "stiefel", "product:<blocks>"}; }

Problem make_builtin(const std::string& id, const BuiltinParams& params) {
  std::mt19937_64 rng(params.seed);
  if (id == "sphere") {
    Vector w = Vector::Zero(params.n);
    if (params.n > 0) w(0) = 1.0;
    return make_sphere(params.n, w, params.radius);
  }
  if (id == "rayleigh") {
    Matrix a;
    if (params.matrix) {
      a = *params.matrix;
    } else {
      a = Vector::LinSpaced(params.n, 1.0, static_cast<double>(params.n)).asDiagonal();
    }
    return make_rayleigh_sphere(a, params.radius);
  }
  if (id == "stiefel") {
    const Matrix c = gaussian_matrix(params.n, params.p, rng);
    const Vector cv = Eigen::Map<const Vector>(c.data(), c.size());
    return make_stiefel(params.n, params.p, params.radius, linear_cost(cv));
  }
  if (id.rfind("product:", 0) == 0) {
    std::vector<Problem> blocks;
    std::stringstream ss(id.substr(8));
    std::string token;
    while (std::getline(ss, token, ',')) blocks.push_back(product_block(token, params.radius));
    if (blocks.empty()) throw std::invalid_argument("product: no blocks given");
    Index dim = 0;
    for (const Problem& b : blocks) dim += b.dim_x();
    // Random symmetric quadratic cost coupling the blocks.
    const Matrix g = gaussian_matrix(dim, dim, rng);
    const Matrix a = (g + g.transpose()) / (2.0 * std::sqrt(static_cast<double>(dim)));
    return make_product(blocks, quadratic_cost(a, Vector::Zero(dim)));
  }
  throw std::invalid_argument("unknown problem id '" + id + "'");
}

}  // namespace fletcher
