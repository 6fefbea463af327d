#pragma once

#include "demandcast/panel.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace demandcast {

// Category vocabularies shared by the neural models: profession and module
// labels map to embedding rows. Lookup of an unseen label raises
// CategoryError.
class CategoryVocab {
public:
	static CategoryVocab from_panel(const Panel& panel);
	static CategoryVocab from_lists(std::vector<std::string> professions,
	                                std::vector<std::string> modules);

	std::size_t profession_id(const std::string& label) const;
	std::size_t module_id(const std::string& label) const;

	const std::vector<std::string>& professions() const { return professions_; }
	const std::vector<std::string>& modules() const { return modules_; }

	// ceil(n/2) capped at 8
	std::size_t profession_embed_dim() const { return embed_dim(professions_.size()); }
	std::size_t module_embed_dim() const { return embed_dim(modules_.size()); }

	static std::size_t embed_dim(std::size_t n_categories);

private:
	std::vector<std::string> professions_;
	std::vector<std::string> modules_;
	std::map<std::string, std::size_t> profession_ids_;
	std::map<std::string, std::size_t> module_ids_;
};

} // namespace demandcast
