#include "demandcast/checkpoint.hpp"

#include "demandcast/errors.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");

namespace demandcast {

namespace {

constexpr char kMagic[4] = {'D', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
	out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& out, std::uint64_t v) {
	out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_string(std::ostream& out, const std::string& s) {
	write_u32(out, static_cast<std::uint32_t>(s.size()));
	out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) {
	std::uint32_t v = 0;
	in.read(reinterpret_cast<char*>(&v), sizeof(v));
	return v;
}

std::uint64_t read_u64(std::istream& in) {
	std::uint64_t v = 0;
	in.read(reinterpret_cast<char*>(&v), sizeof(v));
	return v;
}

std::string read_string(std::istream& in) {
	const std::uint32_t len = read_u32(in);
	if (len > (1u << 20)) {
		throw FormatError("checkpoint string field implausibly long");
	}
	std::string s(len, '\0');
	in.read(s.data(), len);
	return s;
}

} // namespace

void save_checkpoint(const std::string& path, const std::string& model_name,
                     const std::vector<ad::Tensor>& tensors) {
	std::ofstream out(path, std::ios::binary);
	if (!out) {
		throw FormatError("cannot write checkpoint " + path);
	}
	out.write(kMagic, 4);
	write_u32(out, kVersion);
	write_string(out, model_name);
	write_u32(out, static_cast<std::uint32_t>(tensors.size()));
	for (const auto& t : tensors) {
		write_string(out, t->name);
		write_u32(out, static_cast<std::uint32_t>(t->shape.size()));
		for (const std::size_t dim : t->shape) {
			write_u64(out, dim);
		}
		out.write(reinterpret_cast<const char*>(t->value.data()),
		          static_cast<std::streamsize>(t->value.size() * sizeof(double)));
	}
	if (!out) {
		throw FormatError("short write to checkpoint " + path);
	}
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw FormatError("cannot read checkpoint " + path);
	}
	char magic[4] = {};
	in.read(magic, 4);
	if (std::memcmp(magic, kMagic, 4) != 0) {
		throw FormatError("not a checkpoint file: " + path);
	}
	const std::uint32_t version = read_u32(in);
	if (version != kVersion) {
		throw FormatError("unsupported checkpoint version " + std::to_string(version));
	}
	LoadedCheckpoint out;
	out.model_name = read_string(in);
	const std::uint32_t count = read_u32(in);
	for (std::uint32_t i = 0; i < count; ++i) {
		const std::string name = read_string(in);
		const std::uint32_t ndim = read_u32(in);
		std::vector<std::size_t> shape(ndim);
		std::size_t total = 1;
		for (auto& dim : shape) {
			dim = static_cast<std::size_t>(read_u64(in));
			total *= dim;
		}
		std::vector<double> values(total);
		in.read(reinterpret_cast<char*>(values.data()),
		        static_cast<std::streamsize>(total * sizeof(double)));
		if (!in) {
			throw FormatError("truncated checkpoint " + path);
		}
		out.tensors[name] = ad::make_tensor(std::move(shape), std::move(values), false, name);
	}
	return out;
}

} // namespace demandcast
