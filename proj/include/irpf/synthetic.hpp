#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "irpf/signal_io.hpp"

namespace irpf {

enum class ArtifactKind { Blink, VEM, HEM, EMG, Pop };

std::string_view to_string(ArtifactKind kind);

/// Fraction of epochs carrying each artifact kind; the rest is clean.
struct ArtifactMix {
  double blink = 0.0;
  double vem = 0.0;
  double hem = 0.0;
  double emg = 0.0;
  double pop = 0.0;

  double total() const noexcept { return blink + vem + hem + emg + pop; }
};

struct SyntheticSpec {
  std::size_t n_channels = 21;
  double duration_s = 400.0;
  double rate_hz = 200.0;
  double epoch_duration = 4.0;
  ArtifactMix artifact_mix;
  std::uint64_t seed = 0;
  /// Per-channel RMS of the pink background, microvolts.
  double background_rms = 12.0;
};

struct InjectedEvent {
  ArtifactKind kind = ArtifactKind::Blink;
  Eigen::Index start = 0;
  Eigen::Index length = 0;
  std::vector<std::string> channels;
  /// Peak amplitude (RMS for EMG), microvolts.
  double amplitude = 0.0;
};

struct SyntheticData {
  Recording recording;
  /// Epochs of the raw recording with labels derived from `events`.
  EpochSet epochs;
  std::vector<InjectedEvent> events;
};

/// Fp1 Fpz Fp2 F7 F3 Fz F4 F8 T7 T8 C3 Cz C4 P7 P3 Pz P4 P8 O1 Oz O2.
const std::vector<std::string>& standard_montage();

/// Channels are the first n_channels of the standard montage (n <= 21).
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Epoch i is Artifact iff some event overlaps its sample range.
std::vector<Label> labels_from_events(const std::vector<InjectedEvent>& events, std::size_t n_epochs,
                                      Eigen::Index epoch_length);

/// Reference corpus recording: 21 channels, 200 Hz, 400 s, 20% artifacts.
SyntheticSpec corpus_spec(std::uint64_t seed);

/// Field over the standard montage: eye potatoes on frontal channels,
/// high-frequency diag-Euclidean potatoes on peripheral channels and one
/// general all-channel potato.
FieldConfig default_field_config();

}  // namespace irpf
