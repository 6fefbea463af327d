#include "demandcast/categorical.hpp"

#include "demandcast/errors.hpp"

#include <algorithm>
#include <set>

namespace demandcast {

CategoryVocab CategoryVocab::from_panel(const Panel& panel) {
	std::set<std::string> professions, modules;
	for (const auto& [key, _] : panel.series()) {
		professions.insert(key.profession);
		modules.insert(key.module);
	}
	return from_lists(std::vector<std::string>(professions.begin(), professions.end()),
	                  std::vector<std::string>(modules.begin(), modules.end()));
}

CategoryVocab CategoryVocab::from_lists(std::vector<std::string> professions,
                                        std::vector<std::string> modules) {
	CategoryVocab v;
	v.professions_ = std::move(professions);
	v.modules_ = std::move(modules);
	std::sort(v.professions_.begin(), v.professions_.end());
	std::sort(v.modules_.begin(), v.modules_.end());
	for (std::size_t i = 0; i < v.professions_.size(); ++i) {
		v.profession_ids_[v.professions_[i]] = i;
	}
	for (std::size_t i = 0; i < v.modules_.size(); ++i) {
		v.module_ids_[v.modules_[i]] = i;
	}
	return v;
}

std::size_t CategoryVocab::profession_id(const std::string& label) const {
	const auto it = profession_ids_.find(label);
	if (it == profession_ids_.end()) {
		throw CategoryError("unseen profession '" + label + "'");
	}
	return it->second;
}

std::size_t CategoryVocab::module_id(const std::string& label) const {
	const auto it = module_ids_.find(label);
	if (it == module_ids_.end()) {
		throw CategoryError("unseen module '" + label + "'");
	}
	return it->second;
}

std::size_t CategoryVocab::embed_dim(std::size_t n_categories) {
	return std::min<std::size_t>(8, (n_categories + 1) / 2);
}

} // namespace demandcast
