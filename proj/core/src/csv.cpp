#include "demandcast/csv.hpp"

#include "demandcast/errors.hpp"

#include <zlib.h>

#include <fstream>
#include <sstream>

namespace demandcast {

std::vector<std::string> split_csv_line(const std::string& line) {
	std::vector<std::string> fields;
	std::string cur;
	for (const char c : line) {
		if (c == ',') {
			fields.push_back(cur);
			cur.clear();
		} else if (c != '\r') {
			cur.push_back(c);
		}
	}
	fields.push_back(cur);
	return fields;
}

namespace {

bool ends_with_gz(const std::string& path) {
	return path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
}

void for_each_line_gz(const std::string& path,
                      const std::function<void(std::size_t, const std::string&)>& row) {
	gzFile f = gzopen(path.c_str(), "rb");
	if (f == nullptr) {
		throw IngestError("cannot open gzip file: " + path);
	}
	std::string pending;
	std::size_t line_no = 0;
	char buf[1 << 16];
	int n = 0;
	while ((n = gzread(f, buf, sizeof(buf))) > 0) {
		pending.append(buf, static_cast<std::size_t>(n));
		std::size_t pos = 0;
		std::size_t nl = 0;
		while ((nl = pending.find('\n', pos)) != std::string::npos) {
			row(++line_no, pending.substr(pos, nl - pos));
			pos = nl + 1;
		}
		pending.erase(0, pos);
	}
	const bool read_error = n < 0;
	gzclose(f);
	if (read_error) {
		throw IngestError("gzip read error in " + path);
	}
	if (!pending.empty()) {
		row(++line_no, pending);
	}
}

} // namespace

void for_each_line(const std::string& path,
                   const std::function<void(std::size_t, const std::string&)>& row) {
	if (ends_with_gz(path)) {
		for_each_line_gz(path, row);
		return;
	}
	std::ifstream in(path);
	if (!in) {
		throw IngestError("cannot open file: " + path);
	}
	std::string line;
	std::size_t line_no = 0;
	while (std::getline(in, line)) {
		row(++line_no, line);
	}
}

std::string read_text_file(const std::string& path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw FormatError("cannot open file: " + path);
	}
	std::ostringstream out;
	out << in.rdbuf();
	return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
	std::ofstream out(path, std::ios::binary);
	if (!out) {
		throw FormatError("cannot write file: " + path);
	}
	out << content;
}

} // namespace demandcast
