#include "t2p/layout_model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>

#include "json.hpp"

#include "t2p/checkpoint.hpp"
#include "t2p/rng.hpp"

namespace t2p {

using nn::Tape;
using nn::Tensor;

const char* attribute_name(TextAttribute a) {
    switch (a) {
        case TextAttribute::Title: return "title";
        case TextAttribute::Subtitle: return "subtitle";
        case TextAttribute::Body: return "body";
    }
    return "body";
}

TextAttribute attribute_from_name(const std::string& name) {
    std::string s;
    for (char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (s == "title") return TextAttribute::Title;
    if (s == "subtitle") return TextAttribute::Subtitle;
    if (s == "body") return TextAttribute::Body;
    throw InvalidInputError("unknown text attribute: " + name);
}

double attribute_line_height(TextAttribute a) {
    switch (a) {
        case TextAttribute::Title: return 0.08;
        case TextAttribute::Subtitle: return 0.05;
        case TextAttribute::Body: return 0.035;
    }
    return 0.035;
}

std::vector<BoxSize> size_boxes(const std::vector<TextElement>& texts) {
    if (texts.empty()) throw InvalidInputError("size_boxes: empty text list");
    std::vector<BoxSize> sizes;
    sizes.reserve(texts.size());
    for (const auto& t : texts) {
        if (t.text.empty()) throw InvalidInputError("size_boxes: empty text");
        const double h = attribute_line_height(t.attribute);
        const double w = std::min(0.9, static_cast<double>(t.text.size()) * h * 0.55);
        sizes.push_back({w, h});
    }
    return sizes;
}

Layout sample_initial_layout(const LayoutDistribution& l, const std::vector<TextElement>& texts,
                             std::uint64_t seed) {
    if (texts.empty()) throw InvalidInputError("sample_initial_layout: empty text list");
    const auto sizes = size_boxes(texts);
    std::vector<double> cdf(l.values.size());
    double total = 0.0;
    for (size_t i = 0; i < l.values.size(); ++i) {
        total += std::max(0.0, l.values[i]);
        cdf[i] = total;
    }
    const bool degenerate = !(total > 0.0);
    if (degenerate) {
        std::cerr << "[t2p] warning: layout distribution has no mass, sampling uniformly\n";
    }
    Rng rng(seed);
    Layout layout;
    for (size_t i = 0; i < texts.size(); ++i) {
        int px = 0, py = 0;
        if (degenerate) {
            px = rng.uniform_int(l.width);
            py = rng.uniform_int(l.height);
        } else {
            const double u = rng.uniform() * total;
            const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            const size_t idx = std::min(l.values.size() - 1,
                                        static_cast<size_t>(std::distance(cdf.begin(), it)));
            px = static_cast<int>(idx) % l.width;
            py = static_cast<int>(idx) / l.width;
        }
        TextBox box;
        box.width = sizes[i].width;
        box.height = sizes[i].height;
        box.x = std::clamp((px + 0.5) / l.width, 0.0, 1.0 - box.width);
        box.y = std::clamp((py + 0.5) / l.height, 0.0, 1.0 - box.height);
        layout.boxes.push_back(box);
    }
    return layout;
}

namespace {

// Spatial dims after each stride-2 conv with "same"-style padding (k odd,
// pad=(k-1)/2): ceil(n/2).
std::pair<int, int> halve(std::pair<int, int> d) { return {(d.first + 1) / 2, (d.second + 1) / 2}; }

std::string g1_meta(const G1Config& c) {
    nlohmann::json j{{"model", "g1"},
                     {"map_w", c.map_w},
                     {"map_h", c.map_h},
                     {"channels", c.channels},
                     {"kernel", c.kernel},
                     {"feature_dim", c.feature_dim},
                     {"embed_channels", c.embed_channels}};
    return j.dump();
}

std::string g2_meta(const G2Config& c) {
    nlohmann::json j{{"model", "g2"},      {"map_w", c.map_w},
                     {"map_h", c.map_h},   {"channels", c.channels},
                     {"kernel", c.kernel}, {"context_dim", c.context_dim},
                     {"hidden", c.hidden}, {"lstm_layers", c.lstm_layers}};
    return j.dump();
}

Tensor map_tensor(const std::vector<double>& values, int w, int h) {
    Tensor t({1, h, w});
    std::copy(values.begin(), values.end(), t.vec().begin());
    return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// G1

G1Model::G1Model(G1Config cfg, std::uint64_t init_seed) : cfg_(cfg) {
    if (cfg_.map_w < 8 || cfg_.map_h < 8 || cfg_.channels < 1 || cfg_.kernel % 2 != 1 ||
        cfg_.feature_dim < 1 || cfg_.embed_channels < 1) {
        throw ConfigError("g1: invalid configuration");
    }
    dims_[0] = {cfg_.map_h, cfg_.map_w};
    for (int i = 1; i <= 3; ++i) dims_[static_cast<size_t>(i)] = halve(dims_[static_cast<size_t>(i - 1)]);
    grid_h_ = dims_[3].first;
    grid_w_ = dims_[3].second;

    Rng rng(init_seed);
    const int k = cfg_.kernel, ch = cfg_.channels;
    auto addp = [&](const std::string& name, Tensor t) { p_.push_back(&store_.add(name, std::move(t))); };
    auto conv_w = [&](int co, int ci) {
        return nn::init_uniform_fanin({co, ci, k, k}, ci * k * k, rng.next_u64());
    };
    addp("g1.enc.conv1.w", conv_w(ch, 1));
    addp("g1.enc.conv1.b", Tensor({ch}));
    addp("g1.enc.conv2.w", conv_w(ch, ch));
    addp("g1.enc.conv2.b", Tensor({ch}));
    addp("g1.enc.conv3.w", conv_w(ch, ch));
    addp("g1.enc.conv3.b", Tensor({ch}));
    const int flat = ch * grid_h_ * grid_w_;
    addp("g1.enc.fc.w", nn::init_uniform_fanin({cfg_.feature_dim, flat}, flat, rng.next_u64()));
    addp("g1.enc.fc.b", Tensor({cfg_.feature_dim}));
    addp("g1.embed", nn::init_uniform_fanin({cfg_.embed_channels, grid_h_, grid_w_}, cfg_.embed_channels,
                                            rng.next_u64()));
    const int dc = cfg_.feature_dim + cfg_.embed_channels;
    auto tconv_w = [&](int cin, int cout) {
        return nn::init_uniform_fanin({cin, cout, k, k}, cin * k * k / 4, rng.next_u64());
    };
    addp("g1.dec.tconv1.w", tconv_w(dc, ch));
    addp("g1.dec.tconv1.b", Tensor({ch}));
    addp("g1.dec.tconv2.w", tconv_w(ch, ch));
    addp("g1.dec.tconv2.b", Tensor({ch}));
    addp("g1.dec.tconv3.w", tconv_w(ch, 1));
    addp("g1.dec.tconv3.b", Tensor({1}));
}

Tape::Id G1Model::build_forward(Tape& t, Tape::Id input) const {
    const auto& d = t.value(input).dims();
    if (d.size() != 3 || d[0] != 1 || d[1] != cfg_.map_h || d[2] != cfg_.map_w) {
        throw ConfigError("g1: input dims do not match the training resolution");
    }
    const int k = cfg_.kernel, pad = (k - 1) / 2;
    auto pid = [&](int i) { return t.param(*p_[static_cast<size_t>(i)]); };
    auto x = t.relu(t.conv2d(input, pid(0), pid(1), 2, pad, "g1.enc.conv1"));
    x = t.relu(t.conv2d(x, pid(2), pid(3), 2, pad, "g1.enc.conv2"));
    x = t.relu(t.conv2d(x, pid(4), pid(5), 2, pad, "g1.enc.conv3"));
    x = t.reshape(x, {cfg_.channels * grid_h_ * grid_w_});
    auto f = t.relu(t.matvec(pid(6), x, pid(7), "g1.enc.fc"));
    auto grid = t.broadcast_grid(f, grid_h_, grid_w_);
    auto dec_in = t.concat_channels({grid, pid(8)});
    auto y = t.relu(t.tconv2d(dec_in, pid(9), pid(10), 2, pad, dims_[2].first, dims_[2].second, "g1.dec.tconv1"));
    y = t.relu(t.tconv2d(y, pid(11), pid(12), 2, pad, dims_[1].first, dims_[1].second, "g1.dec.tconv2"));
    y = t.sigmoid(t.tconv2d(y, pid(13), pid(14), 2, pad, dims_[0].first, dims_[0].second, "g1.dec.tconv3"));
    return y;
}

LayoutDistribution G1Model::predict(const SmoothRegionMap& a) const {
    if (a.width != cfg_.map_w || a.height != cfg_.map_h) {
        throw ConfigError("g1.predict: map dims mismatch");
    }
    Tape t;
    auto out = build_forward(t, t.input(map_tensor(a.values, a.width, a.height)));
    LayoutDistribution l(cfg_.map_w, cfg_.map_h);
    l.values = t.value(out).vec();
    return l;
}

void G1Model::save(const std::filesystem::path& path, const nn::Adam* opt) const {
    nn::save_checkpoint(path, store_, opt, g1_meta(cfg_));
}

G1Model G1Model::load(const std::filesystem::path& path) {
    const auto meta = nlohmann::json::parse(nn::read_checkpoint_meta(path), nullptr, false);
    if (meta.is_discarded() || meta.value("model", "") != "g1") {
        throw LoadError("g1.load: not a g1 checkpoint: " + path.string());
    }
    G1Config cfg;
    cfg.map_w = meta.at("map_w").get<int>();
    cfg.map_h = meta.at("map_h").get<int>();
    cfg.channels = meta.at("channels").get<int>();
    cfg.kernel = meta.at("kernel").get<int>();
    cfg.feature_dim = meta.at("feature_dim").get<int>();
    cfg.embed_channels = meta.at("embed_channels").get<int>();
    G1Model model(cfg);
    nn::load_checkpoint(path, model.store_);
    return model;
}

// ---------------------------------------------------------------------------
// G2

G2Model::G2Model(G2Config cfg, std::uint64_t init_seed) : cfg_(cfg) {
    if (cfg_.map_w < 8 || cfg_.map_h < 8 || cfg_.channels < 1 || cfg_.kernel % 2 != 1 ||
        cfg_.context_dim < 1 || cfg_.hidden < 1 || cfg_.lstm_layers < 1) {
        throw ConfigError("g2: invalid configuration");
    }
    std::pair<int, int> d{cfg_.map_h, cfg_.map_w};
    for (int i = 0; i < 3; ++i) d = halve(d);
    grid_h_ = d.first;
    grid_w_ = d.second;

    Rng rng(init_seed);
    const int k = cfg_.kernel, ch = cfg_.channels;
    auto addp = [&](const std::string& name, Tensor t) { p_.push_back(&store_.add(name, std::move(t))); };
    auto conv_w = [&](int co, int ci) {
        return nn::init_uniform_fanin({co, ci, k, k}, ci * k * k, rng.next_u64());
    };
    addp("g2.enc.conv1.w", conv_w(ch, 2));
    addp("g2.enc.conv1.b", Tensor({ch}));
    addp("g2.enc.conv2.w", conv_w(ch, ch));
    addp("g2.enc.conv2.b", Tensor({ch}));
    addp("g2.enc.conv3.w", conv_w(ch, ch));
    addp("g2.enc.conv3.b", Tensor({ch}));
    const int flat = ch * grid_h_ * grid_w_;
    addp("g2.enc.fc.w", nn::init_uniform_fanin({cfg_.context_dim, flat}, flat, rng.next_u64()));
    addp("g2.enc.fc.b", Tensor({cfg_.context_dim}));
    lstm_ = nn::BiLstmParams::create(store_, "g2.lstm", cfg_.context_dim + 7, cfg_.hidden,
                                     cfg_.lstm_layers, rng.next_u64());
    addp("g2.head.w", nn::init_uniform_fanin({2, 2 * cfg_.hidden}, 2 * cfg_.hidden, rng.next_u64()));
    addp("g2.head.b", Tensor({2}));
}

Tape::Id G2Model::build_context(Tape& t, Tape::Id map_in) const {
    const int pad = (cfg_.kernel - 1) / 2;
    auto pid = [&](int i) { return t.param(*p_[static_cast<size_t>(i)]); };
    auto x = t.relu(t.conv2d(map_in, pid(0), pid(1), 2, pad, "g2.enc.conv1"));
    x = t.relu(t.conv2d(x, pid(2), pid(3), 2, pad, "g2.enc.conv2"));
    x = t.relu(t.conv2d(x, pid(4), pid(5), 2, pad, "g2.enc.conv3"));
    x = t.reshape(x, {cfg_.channels * grid_h_ * grid_w_});
    return t.relu(t.matvec(pid(6), x, pid(7), "g2.enc.fc"));
}

std::vector<Tape::Id> G2Model::build_steps(Tape& t, Tape::Id ctx, const Layout& layout,
                                           const std::vector<TextAttribute>& attrs) const {
    if (layout.boxes.empty()) throw InvalidInputError("g2: empty layout");
    if (attrs.size() != layout.boxes.size()) throw ConfigError("g2: attrs/boxes length mismatch");
    std::vector<Tape::Id> xs;
    xs.reserve(layout.boxes.size());
    for (size_t i = 0; i < layout.boxes.size(); ++i) {
        const auto& b = layout.boxes[i];
        Tensor geo = Tensor::from_data({7}, {b.x, b.y, b.width, b.height, 0.0, 0.0, 0.0});
        geo[4 + static_cast<int>(attrs[i])] = 1.0;
        xs.push_back(t.concat({ctx, t.input(std::move(geo))}));
    }
    auto hs = nn::bilstm_build(t, xs, lstm_);
    std::vector<Tape::Id> outs;
    outs.reserve(hs.size());
    auto head_w = t.param(*p_[8]);
    auto head_b = t.param(*p_[9]);
    for (auto h : hs) outs.push_back(t.matvec(head_w, h, head_b, "g2.head"));
    return outs;
}

Tensor G2Model::encode_context(const SmoothRegionMap& a, const LayoutDistribution& l) const {
    if (a.width != cfg_.map_w || a.height != cfg_.map_h || l.width != cfg_.map_w ||
        l.height != cfg_.map_h) {
        throw ConfigError("g2.encode_context: map dims mismatch");
    }
    Tape t;
    auto am = t.input(map_tensor(a.values, a.width, a.height));
    auto lm = t.input(map_tensor(l.values, l.width, l.height));
    auto ctx = build_context(t, t.concat_channels({am, lm}));
    return t.value(ctx);
}

std::vector<std::array<double, 2>> G2Model::step(const Tensor& context, const Layout& layout,
                                                 const std::vector<TextAttribute>& attrs) const {
    Tape t;
    auto ctx = t.input(context);
    auto outs = build_steps(t, ctx, layout, attrs);
    std::vector<std::array<double, 2>> res;
    res.reserve(outs.size());
    for (auto id : outs) {
        const auto& v = t.value(id);
        res.push_back({v[0], v[1]});
    }
    return res;
}

Layout G2Model::refine(const SmoothRegionMap& a, const LayoutDistribution& l, const Layout& initial,
                       const std::vector<TextAttribute>& attrs, int k_iters) const {
    if (initial.boxes.empty()) throw InvalidInputError("g2.refine: empty layout");
    if (k_iters < 0) throw InvalidInputError("g2.refine: negative iteration count");
    Layout cur = initial;
    if (k_iters == 0) return cur;
    const Tensor ctx = encode_context(a, l);
    for (int k = 0; k < k_iters; ++k) {
        const auto pos = step(ctx, cur, attrs);
        for (size_t i = 0; i < cur.boxes.size(); ++i) {
            TextBox& b = cur.boxes[i];
            b.x = std::clamp(pos[i][0], 0.0, std::max(0.0, 1.0 - b.width));
            b.y = std::clamp(pos[i][1], 0.0, std::max(0.0, 1.0 - b.height));
        }
    }
    return cur;
}

Tape::Id G2Model::build_training_loss(Tape& t, const SmoothRegionMap& a, const LayoutDistribution& l,
                                      const Layout& p0, const std::vector<TextAttribute>& attrs,
                                      const Layout& target) const {
    if (target.boxes.size() != p0.boxes.size()) throw ConfigError("g2: target/p0 length mismatch");
    auto am = t.input(map_tensor(a.values, a.width, a.height));
    auto lm = t.input(map_tensor(l.values, l.width, l.height));
    auto ctx = build_context(t, t.concat_channels({am, lm}));
    auto outs = build_steps(t, ctx, p0, attrs);
    std::vector<double> tgt;
    for (const auto& b : target.boxes) {
        tgt.push_back(b.x);
        tgt.push_back(b.y);
    }
    auto pred = t.concat(outs);
    auto tgt_id = t.input(Tensor::from_data({static_cast<int>(tgt.size())}, tgt));
    return t.mse(pred, tgt_id);
}

void G2Model::save(const std::filesystem::path& path, const nn::Adam* opt) const {
    nn::save_checkpoint(path, store_, opt, g2_meta(cfg_));
}

G2Model G2Model::load(const std::filesystem::path& path) {
    const auto meta = nlohmann::json::parse(nn::read_checkpoint_meta(path), nullptr, false);
    if (meta.is_discarded() || meta.value("model", "") != "g2") {
        throw LoadError("g2.load: not a g2 checkpoint: " + path.string());
    }
    G2Config cfg;
    cfg.map_w = meta.at("map_w").get<int>();
    cfg.map_h = meta.at("map_h").get<int>();
    cfg.channels = meta.at("channels").get<int>();
    cfg.kernel = meta.at("kernel").get<int>();
    cfg.context_dim = meta.at("context_dim").get<int>();
    cfg.hidden = meta.at("hidden").get<int>();
    cfg.lstm_layers = meta.at("lstm_layers").get<int>();
    G2Model model(cfg);
    nn::load_checkpoint(path, model.store_);
    return model;
}

// ---------------------------------------------------------------------------
// Training loops

namespace {

void check_set(const TrainingSet& data, const char* who) {
    if (data.samples.empty() || data.train_ids.empty()) {
        throw InvalidInputError(std::string(who) + ": empty dataset");
    }
}

std::vector<int> epoch_order(const std::vector<int>& ids, Rng& rng) {
    std::vector<int> order = ids;
    for (size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<size_t>(rng.uniform_int(static_cast<int>(i)))]);
    }
    return order;
}

}  // namespace

double g1_validation_mse(const G1Model& model, const TrainingSet& data) {
    const auto& ids = data.val_ids.empty() ? data.train_ids : data.val_ids;
    double acc = 0.0;
    size_t n = 0;
    for (int id : ids) {
        const auto& s = data.samples[static_cast<size_t>(id)];
        const auto pred = model.predict(s.smooth);
        double mse = 0.0;
        for (size_t i = 0; i < pred.values.size(); ++i) {
            const double d = pred.values[i] - s.layout.values[i];
            mse += d * d;
        }
        acc += mse / static_cast<double>(pred.values.size());
        ++n;
    }
    return acc / static_cast<double>(n);
}

double constant_predictor_mse(const TrainingSet& data, double c) {
    const auto& ids = data.val_ids.empty() ? data.train_ids : data.val_ids;
    double acc = 0.0;
    size_t n = 0;
    for (int id : ids) {
        const auto& s = data.samples[static_cast<size_t>(id)];
        double mse = 0.0;
        for (double v : s.layout.values) {
            const double d = v - c;
            mse += d * d;
        }
        acc += mse / static_cast<double>(s.layout.values.size());
        ++n;
    }
    return acc / static_cast<double>(n);
}

TrainReport train_g1(G1Model& model, const TrainingSet& data, const TrainHyper& hyper) {
    check_set(data, "train_g1");
    const auto t0 = std::chrono::steady_clock::now();
    nn::Adam opt(model.params(), {hyper.lr});
    Rng rng(hyper.seed);
    TrainReport report;
    Tape tape;
    bool done = false;
    for (int epoch = 0; epoch < hyper.epochs && !done; ++epoch) {
        const auto order = epoch_order(data.train_ids, rng);
        for (size_t off = 0; off < order.size() && !done; off += static_cast<size_t>(hyper.batch)) {
            const size_t end = std::min(order.size(), off + static_cast<size_t>(hyper.batch));
            const double inv = 1.0 / static_cast<double>(end - off);
            double batch_loss = 0.0;
            for (size_t bi = off; bi < end; ++bi) {
                const auto& s = data.samples[static_cast<size_t>(order[bi])];
                tape.reset();
                auto in = tape.input(map_tensor(s.smooth.values, s.smooth.width, s.smooth.height));
                auto out = model.build_forward(tape, in);
                auto tgt = tape.input(map_tensor(s.layout.values, s.layout.width, s.layout.height));
                auto loss = tape.scale(tape.mse(out, tgt), inv);
                tape.backward(loss);
                tape.flush_param_grads();
                batch_loss += tape.value(loss)[0];
            }
            if (!std::isfinite(batch_loss)) throw StateError("train_g1: loss diverged");
            opt.step();
            report.loss_curve.push_back(batch_loss);
            ++report.steps;
            if (hyper.max_steps > 0 && report.steps >= hyper.max_steps) done = true;
        }
        if (hyper.target_val_loss > 0.0) {
            const double v = g1_validation_mse(model, data);
            if (hyper.verbose) {
                std::cerr << "[t2p] g1 epoch " << epoch + 1 << " val mse " << v << "\n";
            }
            if (v <= hyper.target_val_loss) done = true;
        }
    }
    report.val_loss = g1_validation_mse(model, data);
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

namespace {

Layout perturb_layout(const Layout& truth, double dx, double dy, Rng& rng) {
    Layout p0 = truth;
    for (auto& b : p0.boxes) {
        b.x = b.x + rng.uniform(-dx, dx);
        b.y = b.y + rng.uniform(-dy, dy);
    }
    return p0;
}

}  // namespace

TrainReport train_g2(G2Model& model, const TrainingSet& data, const TrainHyper& hyper) {
    check_set(data, "train_g2");
    const auto t0 = std::chrono::steady_clock::now();
    nn::Adam opt(model.params(), {hyper.lr});
    Rng rng(hyper.seed);
    TrainReport report;
    Tape tape;
    bool done = false;
    for (int epoch = 0; epoch < hyper.epochs && !done; ++epoch) {
        const auto order = epoch_order(data.train_ids, rng);
        for (size_t off = 0; off < order.size() && !done; off += static_cast<size_t>(hyper.batch)) {
            const size_t end = std::min(order.size(), off + static_cast<size_t>(hyper.batch));
            const double inv = 1.0 / static_cast<double>(end - off);
            double batch_loss = 0.0;
            for (size_t bi = off; bi < end; ++bi) {
                const auto& s = data.samples[static_cast<size_t>(order[bi])];
                const Layout p0 = perturb_layout(s.boxes, hyper.delta_x, hyper.delta_y, rng);
                tape.reset();
                auto loss = tape.scale(
                    model.build_training_loss(tape, s.smooth, s.layout, p0, s.attrs, s.boxes), inv);
                tape.backward(loss);
                tape.flush_param_grads();
                batch_loss += tape.value(loss)[0];
            }
            if (!std::isfinite(batch_loss)) throw StateError("train_g2: loss diverged");
            opt.step();
            report.loss_curve.push_back(batch_loss);
            ++report.steps;
            if (hyper.max_steps > 0 && report.steps >= hyper.max_steps) done = true;
        }
        if (hyper.target_val_loss > 0.0) {
            const auto ev = eval_g2_positions(model, data, 1, hyper.delta_x, hyper.delta_y, hyper.seed);
            double mean = 0.0;
            for (double e : ev.model_err) mean += e;
            mean /= static_cast<double>(ev.model_err.size());
            if (hyper.verbose) {
                std::cerr << "[t2p] g2 epoch " << epoch + 1 << " val pos err " << mean << "\n";
            }
            if (mean <= hyper.target_val_loss) done = true;
        }
    }
    report.val_loss = 0.0;
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

G2EvalResult eval_g2_positions(const G2Model& model, const TrainingSet& data, int k_iters, double delta_x,
                               double delta_y, std::uint64_t seed) {
    const auto& ids = data.val_ids.empty() ? data.train_ids : data.val_ids;
    if (ids.empty()) throw InvalidInputError("eval_g2_positions: no validation samples");
    G2EvalResult res;
    Rng rng(seed);
    for (int id : ids) {
        const auto& s = data.samples[static_cast<size_t>(id)];
        const Layout p0 = perturb_layout(s.boxes, delta_x, delta_y, rng);
        const Layout refined = model.refine(s.smooth, s.layout, p0, s.attrs, k_iters);
        double base = 0.0, err = 0.0;
        const auto& truth = s.boxes.boxes;
        for (size_t i = 0; i < truth.size(); ++i) {
            base += std::hypot(p0.boxes[i].x - truth[i].x, p0.boxes[i].y - truth[i].y);
            err += std::hypot(refined.boxes[i].x - truth[i].x, refined.boxes[i].y - truth[i].y);
        }
        res.baseline_err.push_back(base / static_cast<double>(truth.size()));
        res.model_err.push_back(err / static_cast<double>(truth.size()));
    }
    return res;
}

}  // namespace t2p
