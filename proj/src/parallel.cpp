#include "rmt/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace rmt
{

std::size_t resolve_jobs(int requested)
{
  if (requested > 0)
  {
    return static_cast<std::size_t>(requested);
  }
  if (const char *env = std::getenv("RMT_LAB_JOBS"))
  {
    try
    {
      const int v = std::stoi(env);
      if (v > 0)
      {
        return static_cast<std::size_t>(v);
      }
    }
    catch (const std::exception &)
    {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)> &body)
{
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs <= 1)
  {
    for (std::size_t i = 0; i < count; i++)
    {
      body(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> workers;
  workers.reserve(jobs);
  for (std::size_t w = 0; w < jobs; w++)
  {
    workers.emplace_back([&] {
      while (!failed.load())
      {
        const std::size_t i = next.fetch_add(1);
        if (i >= count)
        {
          return;
        }
        try
        {
          body(i);
        }
        catch (...)
        {
          std::lock_guard lock(error_mutex);
          if (!error)
          {
            error = std::current_exception();
          }
          failed.store(true);
        }
      }
    });
  }
  workers.clear();
  if (error)
  {
    std::rethrow_exception(error);
  }
}

}  // namespace rmt
