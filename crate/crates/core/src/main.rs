#[global_allocator]
static ALLOC: mmot::alloc_probe::CountingAlloc = mmot::alloc_probe::CountingAlloc;

fn main() {
    std::process::exit(mmot::cli::run(std::env::args_os()));
}
