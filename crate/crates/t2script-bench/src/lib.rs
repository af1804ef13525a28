//! Shared script builders for the benchmarks.

/// A counting loop that exercises blocks, complex expressions, and
/// variable traffic, wrapped in a callable function.
pub fn counting_loop(iterations: u32) -> String {
    format!(
        concat!(
            "#function work private()\n",
            "for i 0 $?[< $i {n}] {{\n",
            "\tif $?[eq $i 5] {{\n",
            "\t\tcontinue;\n",
            "\t}}\n",
            "\tsetvar last $i;\n",
            "}} every {{\n",
            "\tinc i;\n",
            "}}\n",
            "#end work\n",
        ),
        n = iterations
    )
}

/// Parameter text mixing plain data with every expression category.
pub const MIXED_PARAM: &str =
    "user $name has $?[+ $count 1] items, first $=head[$items], done";

/// Module backing the interpolation benchmark.
pub const MIXED_MODULE: &str = concat!(
    "#function head private()\n",
    "\treturn $@arg[0];\n",
    "#end head\n",
);
