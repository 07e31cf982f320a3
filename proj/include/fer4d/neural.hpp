#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "fer4d/bilstm.hpp"
#include "fer4d/convnet.hpp"
#include "fer4d/training.hpp"

namespace fer4d {

std::vector<double> convnet_forward(const ConvNet& model, const Tensor& image);
std::vector<double> bilstm_forward(const BiLstm& model, const FeatureSequence& seq);

TrainResult convnet_train(ConvNet& model, std::span<const Tensor> images, std::span<const std::size_t> labels,
                          const TrainConfig& cfg, const LabeledSet<Tensor>* validation = nullptr);
TrainResult bilstm_train(BiLstm& model, std::span<const FeatureSequence> seqs, std::span<const std::size_t> labels,
                         const TrainConfig& cfg, const LabeledSet<FeatureSequence>* validation = nullptr);

// Binary model file, little-endian:
//   "FER4DMDL" | u32 version | u32 kind (1 ConvNet, 2 BiLSTM)
//   | u32 n | n x f64 hyperparameters
//   | u32 layers | per layer: u32 rank, rank x u64 dims, f64 weights
inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const std::filesystem::path& path, const ConvNet& model);
void save_model(const std::filesystem::path& path, const BiLstm& model);
ConvNet load_convnet(const std::filesystem::path& path);
BiLstm load_bilstm(const std::filesystem::path& path);

}  // namespace fer4d
