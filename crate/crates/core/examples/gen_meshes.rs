//! Writes the synthetic test meshes as OBJ files, for trying out the CLI.

use std::env;

fn main() {
    let dir = env::args().nth(1).unwrap_or_else(|| ".".to_string());
    let hemi = equimap::mesh::bumpy_hemisphere(25);
    equimap::mesh::write_obj(format!("{dir}/hemisphere.obj"), &hemi).unwrap();
    let spike = equimap::mesh::spike_disk(20);
    equimap::mesh::write_obj(format!("{dir}/spike.obj"), &spike).unwrap();
    let square = equimap::mesh::square_grid(16);
    equimap::mesh::write_obj(format!("{dir}/square_grid.obj"), &square).unwrap();
    println!("wrote hemisphere.obj, spike.obj, square_grid.obj to {dir}");
}
