fn main() {
    println!("roomnav");
}
