#pragma once

// Offline GP data sets as CSV: one row `x_1,...,x_n,target` per sample, with
// an optional leading `#` comment line.

#include "swarm_gp_et/error.hpp"
#include "swarm_gp_et/gp.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace swarm_gp_et {

struct Sample {
  Vector input;
  double target = 0.0;
};

inline void write_dataset(std::ostream& out, const GpModel& model) {
  out << std::setprecision(17);
  const auto inputs = model.inputs();
  const auto targets = model.targets();
  for (Eigen::Index r = 0; r < inputs.rows(); ++r) {
    for (Eigen::Index k = 0; k < inputs.cols(); ++k) out << inputs(r, k) << ',';
    out << targets(r) << '\n';
  }
}

inline std::vector<Sample> read_dataset(std::istream& in, int input_dim) {
  std::vector<Sample> samples;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line_no != 1) throw InvalidArgument("dataset: comment only allowed on the first line");
      continue;
    }
    std::vector<double> fields;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || cell.find_first_not_of(" \t", used) != std::string::npos)
        throw InvalidArgument("dataset line " + std::to_string(line_no) + ": bad number '" +
                              cell + "'");
      fields.push_back(v);
    }
    if (static_cast<int>(fields.size()) != input_dim + 1)
      throw InvalidArgument("dataset line " + std::to_string(line_no) + ": expected " +
                            std::to_string(input_dim + 1) + " columns, got " +
                            std::to_string(fields.size()));
    Sample s;
    s.input = Eigen::Map<const Vector>(fields.data(), input_dim);
    s.target = fields.back();
    samples.push_back(std::move(s));
  }
  return samples;
}

inline void load_into(GpModel& model, const std::vector<Sample>& samples) {
  for (const Sample& s : samples) model.add_observation(s.input, s.target);
}

}  // namespace swarm_gp_et
