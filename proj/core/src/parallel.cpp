#include "demandcast/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace demandcast {

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
	if (n == 0) {
		return;
	}
	if (jobs == 0) {
		jobs = std::max(1u, std::thread::hardware_concurrency());
	}
	jobs = std::min(jobs, n);
	if (jobs == 1) {
		for (std::size_t i = 0; i < n; ++i) {
			fn(i);
		}
		return;
	}

	std::atomic<std::size_t> next{0};
	std::exception_ptr first_error;
	std::mutex error_mutex;
	std::vector<std::thread> pool;
	pool.reserve(jobs);
	for (std::size_t w = 0; w < jobs; ++w) {
		pool.emplace_back([&] {
			for (;;) {
				const std::size_t i = next.fetch_add(1);
				if (i >= n) {
					return;
				}
				try {
					fn(i);
				} catch (...) {
					std::lock_guard<std::mutex> lock(error_mutex);
					if (!first_error) {
						first_error = std::current_exception();
					}
				}
			}
		});
	}
	for (auto& t : pool) {
		t.join();
	}
	if (first_error) {
		std::rethrow_exception(first_error);
	}
}

} // namespace demandcast
