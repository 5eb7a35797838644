//! Guide shim: each module inlines one book chapter so its code blocks run as doc-tests.
