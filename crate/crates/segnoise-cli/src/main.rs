fn main() {
    println!("segnoise");
}
