// Test double for the external-backend helper protocol. `encode` emits
// deterministic features derived from pixel means; `segment` returns two
// candidates (box fill scored 0.9, empty mask scored 0.1).

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "protoprompt/npy.hpp"

using protoprompt::npy::Array;
using protoprompt::npy::DType;

int main(int argc, char** argv) {
  if (argc < 2) return 2;
  const std::string command = argv[1];
  std::map<std::string, std::string> args;
  for (int i = 2; i + 1 < argc; i += 2) args[argv[i]] = argv[i + 1];

  if (command == "encode") {
    // --model fake-<dim>-<stride>
    const std::string model = args["--model"];
    int dim = 0, stride = 0;
    if (std::sscanf(model.c_str(), "fake-%d-%d", &dim, &stride) != 2) return 3;
    const Array img = protoprompt::npy::read(args["--input"]);
    const std::size_t rows = img.shape[0], cols = img.shape[1], ch = img.shape[2];
    if (rows % stride != 0 || cols % stride != 0) {
      std::cerr << "input not padded to stride\n";
      return 4;
    }
    Array out;
    out.dtype = DType::kFloat32;
    out.shape = {static_cast<std::size_t>(dim), rows / stride, cols / stride};
    out.values.assign(out.size(), 0.0);
    const std::size_t plane = out.shape[1] * out.shape[2];
    for (std::size_t gr = 0; gr < out.shape[1]; ++gr) {
      for (std::size_t gc = 0; gc < out.shape[2]; ++gc) {
        double sum = 0.0;
        for (std::size_t r = gr * stride; r < (gr + 1) * stride; ++r)
          for (std::size_t c = gc * stride; c < (gc + 1) * stride; ++c)
            for (std::size_t k = 0; k < ch; ++k) sum += img.values[(r * cols + c) * ch + k];
        const double mean = sum / (stride * stride * ch);
        for (int d = 0; d < dim; ++d) out.values[d * plane + gr * out.shape[2] + gc] = std::cos((d + 1) * 3.0 * mean);
      }
    }
    protoprompt::npy::write(args["--output"], out);
    return 0;
  }

  if (command == "segment") {
    const Array img = protoprompt::npy::read(args["--image"]);
    nlohmann::json prompts;
    std::ifstream(args["--prompts"]) >> prompts;
    const std::size_t rows = img.shape[0], cols = img.shape[1];
    Array out;
    out.dtype = DType::kUInt8;
    out.shape = {2, rows, cols};
    out.values.assign(out.size(), 0.0);
    if (!prompts["bbox"].is_null()) {
      const auto b = prompts["bbox"];
      for (int r = b[0].get<int>(); r <= b[2].get<int>(); ++r)
        for (int c = b[1].get<int>(); c <= b[3].get<int>(); ++c) out.values[rows * cols + r * cols + c] = 1;
    }
    protoprompt::npy::write(args["--output"], out);
    std::ofstream(args["--scores"]) << "[0.1, 0.9]";
    return 0;
  }
  return 2;
}
