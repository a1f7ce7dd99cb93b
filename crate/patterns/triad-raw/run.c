for (int j = 0; j < n; j++){
       Triad_run(j);
}
