fn main() {
    std::process::exit(voronoi_angles::cli::run());
}
