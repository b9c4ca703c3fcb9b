# Knowledge package
