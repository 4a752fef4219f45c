#include "t2p/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "t2p/errors.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoint io assumes little-endian host");

namespace t2p::nn {

namespace {

constexpr char kMagic[8] = {'T', '2', 'P', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw LoadError("checkpoint: truncated file");
    return v;
}

void put_string(std::ostream& os, const std::string& s) {
    put<std::uint64_t>(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
    const auto n = get<std::uint64_t>(is);
    if (n > (1u << 20)) throw LoadError("checkpoint: implausible string length");
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    if (!is) throw LoadError("checkpoint: truncated string");
    return s;
}

void put_tensor_data(std::ostream& os, const Tensor& t) {
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(t.size())));
}

void get_tensor_data(std::istream& is, Tensor& t) {
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(t.size())));
    if (!is) throw LoadError("checkpoint: truncated tensor data");
}

std::ifstream open_and_check_header(const std::filesystem::path& path, std::uint32_t* flags,
                                    std::string* meta) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MissingResourceError("checkpoint: cannot open " + path.string());
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0) {
        throw LoadError("checkpoint: bad magic in " + path.string());
    }
    const auto version = get<std::uint32_t>(is);
    if (version != kVersion) throw LoadError("checkpoint: unsupported version");
    *flags = get<std::uint32_t>(is);
    *meta = get_string(is);
    return is;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store, const Adam* opt,
                     const std::string& meta_json) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("checkpoint: cannot write " + path.string());
    os.write(kMagic, 8);
    put<std::uint32_t>(os, kVersion);
    put<std::uint32_t>(os, opt ? 1u : 0u);
    put_string(os, meta_json);
    put<std::uint64_t>(os, store.count());
    for (const auto& p : store.params()) {
        put_string(os, p->name);
        const auto& dims = p->value.dims();
        put<std::uint32_t>(os, static_cast<std::uint32_t>(dims.size()));
        for (int d : dims) put<std::int32_t>(os, d);
        put_tensor_data(os, p->value);
    }
    if (opt) {
        put<std::int64_t>(os, opt->step_count());
        put<double>(os, opt->config().lr);
        put<double>(os, opt->config().beta1);
        put<double>(os, opt->config().beta2);
        put<double>(os, opt->config().eps);
        auto& adam = const_cast<Adam&>(*opt);
        for (size_t i = 0; i < store.count(); ++i) {
            put_tensor_data(os, adam.first_moments()[i]);
            put_tensor_data(os, adam.second_moments()[i]);
        }
    }
    if (!os) throw Error("checkpoint: write failed for " + path.string());
}

std::string read_checkpoint_meta(const std::filesystem::path& path) {
    std::uint32_t flags = 0;
    std::string meta;
    open_and_check_header(path, &flags, &meta);
    return meta;
}

void load_checkpoint(const std::filesystem::path& path, ParameterStore& store, Adam* opt) {
    std::uint32_t flags = 0;
    std::string meta;
    auto is = open_and_check_header(path, &flags, &meta);
    const auto count = get<std::uint64_t>(is);
    if (count != store.count()) {
        throw LoadError("checkpoint: parameter count mismatch in " + path.string());
    }
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::string name = get_string(is);
        Parameter* p = store.find(name);
        if (!p) throw LoadError("checkpoint: unknown parameter '" + name + "'");
        const auto ndims = get<std::uint32_t>(is);
        std::vector<int> dims(ndims);
        for (auto& d : dims) d = get<std::int32_t>(is);
        if (dims != p->value.dims()) throw LoadError("checkpoint: dims mismatch for '" + name + "'");
        get_tensor_data(is, p->value);
    }
    if (opt) {
        if (!(flags & 1u)) throw LoadError("checkpoint: no optimizer state stored");
        opt->set_step_count(get<std::int64_t>(is));
        get<double>(is);  // lr/betas/eps are informational; config stays as constructed
        get<double>(is);
        get<double>(is);
        get<double>(is);
        for (size_t i = 0; i < store.count(); ++i) {
            get_tensor_data(is, opt->first_moments()[i]);
            get_tensor_data(is, opt->second_moments()[i]);
        }
    }
}

}  // namespace t2p::nn
