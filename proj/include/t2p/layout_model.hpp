#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "t2p/adam.hpp"
#include "t2p/image.hpp"
#include "t2p/lstm.hpp"
#include "t2p/tape.hpp"

namespace t2p {

enum class TextAttribute { Title, Subtitle, Body };

const char* attribute_name(TextAttribute a);
TextAttribute attribute_from_name(const std::string& name);  // case-insensitive

struct TextElement {
    std::string text;
    TextAttribute attribute = TextAttribute::Body;
};

// Normalized top-left position plus extents; the unit square is the canvas.
struct TextBox {
    double x = 0, y = 0;
    double width = 0, height = 0;
};

struct Layout {
    std::vector<TextBox> boxes;
};

struct BoxSize {
    double width = 0, height = 0;
};

// Line height by attribute (Title 0.08, Subtitle 0.05, Body 0.035); width =
// chars * height * 0.55 clamped to 0.9.
std::vector<BoxSize> size_boxes(const std::vector<TextElement>& texts);
double attribute_line_height(TextAttribute a);

// Draws each box's top-left from L treated as a distribution over pixels
// (uniform fallback when L has no mass), sizes from size_boxes, clamped
// in-canvas.
Layout sample_initial_layout(const LayoutDistribution& l, const std::vector<TextElement>& texts,
                             std::uint64_t seed);

// ---------------------------------------------------------------------------
// g1: smooth-region map -> layout distribution.

struct G1Config {
    int map_w = 60, map_h = 80;
    int channels = 16;   // kernels per conv layer
    int kernel = 9;
    int feature_dim = 64;
    int embed_channels = 4;
};

class G1Model {
public:
    explicit G1Model(G1Config cfg = {}, std::uint64_t init_seed = 1);

    LayoutDistribution predict(const SmoothRegionMap& a) const;

    // Builds the forward graph on an external tape (training path).
    nn::Tape::Id build_forward(nn::Tape& tape, nn::Tape::Id input) const;

    const G1Config& config() const { return cfg_; }
    nn::ParameterStore& params() { return store_; }
    const nn::ParameterStore& params() const { return store_; }

    void save(const std::filesystem::path& path, const nn::Adam* opt = nullptr) const;
    static G1Model load(const std::filesystem::path& path);

private:
    G1Config cfg_;
    int grid_h_ = 0, grid_w_ = 0;
    std::array<std::pair<int, int>, 4> dims_{};  // spatial dims per stage
    mutable nn::ParameterStore store_;
    struct Layers;
    std::vector<nn::Parameter*> p_;  // flat handles in build order
};

// ---------------------------------------------------------------------------
// g2: iterative refinement of box positions.

struct G2Config {
    int map_w = 60, map_h = 80;
    int channels = 64;  // kernels per conv layer in the map encoder
    int kernel = 5;
    int context_dim = 64;
    int hidden = 200;
    int lstm_layers = 2;
};

class G2Model {
public:
    explicit G2Model(G2Config cfg = {}, std::uint64_t init_seed = 2);

    // Map context from Concat(A, L); cached by callers across iterations.
    nn::Tensor encode_context(const SmoothRegionMap& a, const LayoutDistribution& l) const;

    // One g2 application: positions for each box (absolute, unclamped).
    std::vector<std::array<double, 2>> step(const nn::Tensor& context, const Layout& layout,
                                            const std::vector<TextAttribute>& attrs) const;

    // Applies g2 k_iters times, clamping boxes in-canvas after each pass.
    Layout refine(const SmoothRegionMap& a, const LayoutDistribution& l, const Layout& initial,
                  const std::vector<TextAttribute>& attrs, int k_iters) const;

    // Training graph: loss = mean squared position error vs target.
    nn::Tape::Id build_training_loss(nn::Tape& tape, const SmoothRegionMap& a,
                                     const LayoutDistribution& l, const Layout& p0,
                                     const std::vector<TextAttribute>& attrs,
                                     const Layout& target) const;

    const G2Config& config() const { return cfg_; }
    nn::ParameterStore& params() { return store_; }
    const nn::ParameterStore& params() const { return store_; }

    void save(const std::filesystem::path& path, const nn::Adam* opt = nullptr) const;
    static G2Model load(const std::filesystem::path& path);

private:
    nn::Tape::Id build_context(nn::Tape& tape, nn::Tape::Id map_in) const;
    std::vector<nn::Tape::Id> build_steps(nn::Tape& tape, nn::Tape::Id ctx, const Layout& layout,
                                          const std::vector<TextAttribute>& attrs) const;

    G2Config cfg_;
    int grid_h_ = 0, grid_w_ = 0;
    mutable nn::ParameterStore store_;
    std::vector<nn::Parameter*> p_;
    nn::BiLstmParams lstm_;
};

// ---------------------------------------------------------------------------
// Training.

struct TrainSample {
    SmoothRegionMap smooth;
    LayoutDistribution layout;
    Layout boxes;
    std::vector<TextAttribute> attrs;
};

struct TrainingSet {
    std::vector<TrainSample> samples;
    std::vector<int> train_ids;
    std::vector<int> val_ids;
};

struct TrainHyper {
    double lr = 0.005;  // desk-scale default; the published regime is 0.05 @ batch 512
    int batch = 32;
    int epochs = 3;
    std::uint64_t seed = 7;
    double delta_x = 0.1, delta_y = 0.1;  // g2 perturbation radius
    double target_val_loss = 0.0;         // >0: stop at epoch end once reached
    int max_steps = 0;                    // >0: hard cap
    bool verbose = false;
};

struct TrainReport {
    std::vector<double> loss_curve;  // per optimizer step
    double val_loss = 0.0;
    int steps = 0;
    double seconds = 0.0;
};

TrainReport train_g1(G1Model& model, const TrainingSet& data, const TrainHyper& hyper);
TrainReport train_g2(G2Model& model, const TrainingSet& data, const TrainHyper& hyper);

double g1_validation_mse(const G1Model& model, const TrainingSet& data);
// Mean over pixels of (value - c)^2 against every validation layout map.
double constant_predictor_mse(const TrainingSet& data, double c);

// Per-sample mean Euclidean position error of refine(k_iters) starting from a
// perturbed layout (Uniform(p-delta, p+delta), seeded); also reports the
// identity-baseline error of the perturbed start itself.
struct G2EvalResult {
    std::vector<double> model_err;     // per val sample
    std::vector<double> baseline_err;  // per val sample
};
G2EvalResult eval_g2_positions(const G2Model& model, const TrainingSet& data, int k_iters, double delta_x,
                               double delta_y, std::uint64_t seed);

}  // namespace t2p
